/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "synthstroke/error.hpp"

namespace synthstroke {

using Vec3 = std::array<double, 3>;
/// Row-major: m[row][col].
using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat3 identity3()
{
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

inline Mat4 identity4()
{
    return {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b)
{
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                r[i][j] += a[i][k] * b[k][j];
    return r;
}

inline Vec3 operator*(const Mat3& a, const Vec3& v)
{
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
        r[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    return r;
}

inline Mat4 operator*(const Mat4& a, const Mat4& b)
{
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                r[i][j] += a[i][k] * b[k][j];
    return r;
}

inline Vec3 operator+(const Vec3& a, const Vec3& b)
{
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 operator-(const Vec3& a, const Vec3& b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline double dot(const Vec3& a, const Vec3& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a)
{
    return std::sqrt(dot(a, a));
}

inline Mat3 transpose(const Mat3& m)
{
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i][j] = m[j][i];
    return r;
}

inline double determinant(const Mat3& m)
{
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Mat3 inverse(const Mat3& m)
{
    const double det = determinant(m);
    if (std::abs(det) <= 1e-12)
        throw SingularTransformError("3x3 matrix is singular");
    Mat3 r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
}

/// Homogeneous 4x4 world-space (mm) transform. The last row is always (0,0,0,1).
class AffineTransform
{
  public:
    AffineTransform() : m_(identity4()) {}

    explicit AffineTransform(const Mat4& m) : m_(m)
    {
        m_[3] = {0, 0, 0, 1};
        if (std::abs(determinant(linear())) <= 1e-9)
            throw SingularTransformError("affine transform has a singular linear block");
    }

    AffineTransform(const Mat3& linear, const Vec3& translation)
        : AffineTransform(compose(linear, translation))
    {
    }

    static AffineTransform identity() { return AffineTransform(); }

    static AffineTransform translation(const Vec3& t) { return AffineTransform(identity3(), t); }

    /// Rotation (degrees, applied x then y then z), shear (xy, xz, yx, yz, zx, zy) and
    /// zoom, acting about `center` (mm). Linear block = R * S * Z.
    static AffineTransform from_parameters(const Vec3& rotation_deg, const std::array<double, 6>& shear,
                                           const Vec3& zoom, const Vec3& center = {0, 0, 0})
    {
        const double d2r = std::numbers::pi / 180.0;
        const double ax = rotation_deg[0] * d2r;
        const double ay = rotation_deg[1] * d2r;
        const double az = rotation_deg[2] * d2r;
        const Mat3 rx{{{1, 0, 0}, {0, std::cos(ax), -std::sin(ax)}, {0, std::sin(ax), std::cos(ax)}}};
        const Mat3 ry{{{std::cos(ay), 0, std::sin(ay)}, {0, 1, 0}, {-std::sin(ay), 0, std::cos(ay)}}};
        const Mat3 rz{{{std::cos(az), -std::sin(az), 0}, {std::sin(az), std::cos(az), 0}, {0, 0, 1}}};
        const Mat3 s{{{1, shear[0], shear[1]}, {shear[2], 1, shear[3]}, {shear[4], shear[5], 1}}};
        const Mat3 z{{{zoom[0], 0, 0}, {0, zoom[1], 0}, {0, 0, zoom[2]}}};
        const Mat3 a = rz * ry * rx * s * z;
        // x' = c + A (x - c)
        const Vec3 t = center - a * center;
        return AffineTransform(a, t);
    }

    const Mat4& matrix() const noexcept { return m_; }

    Mat3 linear() const
    {
        return {{{m_[0][0], m_[0][1], m_[0][2]}, {m_[1][0], m_[1][1], m_[1][2]}, {m_[2][0], m_[2][1], m_[2][2]}}};
    }

    Vec3 translation_part() const { return {m_[0][3], m_[1][3], m_[2][3]}; }

    Vec3 apply(const Vec3& p) const { return linear() * p + translation_part(); }

    AffineTransform inverse() const
    {
        const Mat3 inv = synthstroke::inverse(linear());
        const Vec3 t = inv * translation_part();
        return AffineTransform(inv, {-t[0], -t[1], -t[2]});
    }

    /// (this * other)(p) = this(other(p)).
    AffineTransform operator*(const AffineTransform& other) const { return AffineTransform(m_ * other.m_); }

    bool is_identity(double tol = 0.0) const
    {
        const Mat4 id = identity4();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (std::abs(m_[i][j] - id[i][j]) > tol)
                    return false;
        return true;
    }

  private:
    static Mat4 compose(const Mat3& l, const Vec3& t)
    {
        Mat4 m = identity4();
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j)
                m[i][j] = l[i][j];
            m[i][3] = t[i];
        }
        return m;
    }

    Mat4 m_;
};

} // namespace synthstroke
