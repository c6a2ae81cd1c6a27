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

/*
 * Dense 3D images.
 *
 * Voxel data are stored x-fastest: the linear index of (x, y, z) is
 * x + nx * (y + ny * z). World coordinates (mm) of a voxel index i are
 *
 *     world = origin + D * diag(spacing) * i
 *
 * where the columns of the direction matrix D are the unit world
 * directions of the x, y and z index axes.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synthstroke/error.hpp"
#include "synthstroke/geometry.hpp"

namespace synthstroke {

using Shape3 = std::array<std::size_t, 3>;
using Index3 = std::array<std::int64_t, 3>;

struct Grid
{
    Shape3 shape{1, 1, 1};
    Vec3 spacing{1, 1, 1};
    Vec3 origin{0, 0, 0};
    Mat3 direction = identity3();

    Grid() = default;
    explicit Grid(Shape3 s, Vec3 sp = {1, 1, 1}, Vec3 o = {0, 0, 0}, Mat3 d = identity3())
        : shape(s), spacing(sp), origin(o), direction(d)
    {
    }

    std::size_t voxel_count() const noexcept { return shape[0] * shape[1] * shape[2]; }

    double voxel_volume_mm3() const noexcept { return spacing[0] * spacing[1] * spacing[2]; }

    std::size_t linear_index(std::size_t x, std::size_t y, std::size_t z) const noexcept
    {
        return x + shape[0] * (y + shape[1] * z);
    }

    Index3 unravel(std::size_t i) const noexcept
    {
        const auto x = i % shape[0];
        const auto y = (i / shape[0]) % shape[1];
        const auto z = i / (shape[0] * shape[1]);
        return {static_cast<std::int64_t>(x), static_cast<std::int64_t>(y), static_cast<std::int64_t>(z)};
    }

    bool contains(const Index3& i) const noexcept
    {
        for (int a = 0; a < 3; ++a)
            if (i[a] < 0 || i[a] >= static_cast<std::int64_t>(shape[a]))
                return false;
        return true;
    }

    /// D * diag(spacing): maps index offsets to world offsets.
    Mat3 index_to_world_linear() const
    {
        Mat3 m{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                m[r][c] = direction[r][c] * spacing[c];
        return m;
    }

    AffineTransform index_to_world() const { return AffineTransform(index_to_world_linear(), origin); }

    Vec3 world_of(const Vec3& index) const { return origin + index_to_world_linear() * index; }

    Vec3 center_world() const
    {
        return world_of({(shape[0] - 1) / 2.0, (shape[1] - 1) / 2.0, (shape[2] - 1) / 2.0});
    }

    void validate() const
    {
        for (int a = 0; a < 3; ++a) {
            if (shape[a] == 0)
                throw InvalidArgumentError("grid shape must be positive on every axis");
            if (!(spacing[a] > 0) || !std::isfinite(spacing[a]))
                throw InvalidArgumentError("grid spacing must be positive and finite");
        }
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                double d = 0;
                for (int r = 0; r < 3; ++r)
                    d += direction[r][a] * direction[r][b];
                if (std::abs(d - (a == b ? 1.0 : 0.0)) > 1e-6)
                    throw InvalidArgumentError("grid direction columns are not orthonormal");
            }
        }
    }

    bool same_as(const Grid& o, double tol = 1e-6) const
    {
        if (shape != o.shape)
            return false;
        for (int a = 0; a < 3; ++a) {
            if (std::abs(spacing[a] - o.spacing[a]) > tol || std::abs(origin[a] - o.origin[a]) > tol)
                return false;
            for (int b = 0; b < 3; ++b)
                if (std::abs(direction[a][b] - o.direction[a][b]) > tol)
                    return false;
        }
        return true;
    }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what)
{
    if (!a.same_as(b))
        throw GridMismatchError(std::string(what) + ": grids differ");
}

template <class T>
class Image
{
  public:
    using value_type = T;

    Image() = default;

    explicit Image(const Grid& grid, T fill = T{}) : grid_(grid), data_(grid.voxel_count(), fill)
    {
        grid_.validate();
    }

    Image(const Grid& grid, std::vector<T> data) : grid_(grid), data_(std::move(data))
    {
        grid_.validate();
        if (data_.size() != grid_.voxel_count())
            throw InvalidArgumentError("image data length does not match grid shape");
    }

    /// Same grid as `other`, new storage.
    template <class U>
    static Image like(const Image<U>& other, T fill = T{})
    {
        return Image(other.grid(), fill);
    }

    const Grid& grid() const noexcept { return grid_; }
    const Shape3& shape() const noexcept { return grid_.shape; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& at(std::size_t x, std::size_t y, std::size_t z) noexcept { return data_[grid_.linear_index(x, y, z)]; }
    const T& at(std::size_t x, std::size_t y, std::size_t z) const noexcept
    {
        return data_[grid_.linear_index(x, y, z)];
    }

    /// Replaces geometry without touching voxel values (shape must agree).
    void set_geometry(const Grid& g)
    {
        if (g.shape != grid_.shape)
            throw InvalidArgumentError("set_geometry: shape mismatch");
        g.validate();
        grid_ = g;
    }

    bool operator==(const Image& o) const { return grid_.same_as(o.grid_, 0.0) && data_ == o.data_; }

  private:
    Grid grid_;
    std::vector<T> data_;
};

using Volume = Image<float>;
using LabelVolume = Image<std::int32_t>;
/// Values exactly 0 or 1.
using BinaryMask = Image<std::uint8_t>;

template <class T, class U, class F>
Image<T> map_image(const Image<U>& in, F&& f)
{
    Image<T> out(in.grid());
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = static_cast<T>(f(in[i]));
    return out;
}

template <class T>
std::size_t count_nonzero(const Image<T>& img)
{
    return static_cast<std::size_t>(std::count_if(img.storage().begin(), img.storage().end(),
                                                  [](T v) { return v != T{}; }));
}

template <class T>
BinaryMask binarize(const Image<T>& img)
{
    return map_image<std::uint8_t>(img, [](T v) { return v != T{} ? 1 : 0; });
}

template <class T>
Volume to_volume(const Image<T>& img)
{
    return map_image<float>(img, [](T v) { return static_cast<float>(v); });
}

/// Named channels sharing one grid. The tag keeps posterior, logit and
/// probability stacks from being mixed up at compile time.
template <class Tag>
class ChannelStack
{
  public:
    ChannelStack() = default;

    ChannelStack(std::vector<std::string> names, std::vector<Volume> channels)
        : names_(std::move(names)), channels_(std::move(channels))
    {
        if (names_.size() != channels_.size())
            throw InvalidArgumentError("channel stack: name/channel count mismatch");
        for (std::size_t c = 1; c < channels_.size(); ++c)
            require_same_grid(channels_[0].grid(), channels_[c].grid(), "channel stack");
    }

    std::size_t size() const noexcept { return channels_.size(); }
    bool empty() const noexcept { return channels_.empty(); }
    const Grid& grid() const { return channels_.at(0).grid(); }

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Volume>& channels() const noexcept { return channels_; }
    std::vector<Volume>& channels() noexcept { return channels_; }

    Volume& operator[](std::size_t c) { return channels_[c]; }
    const Volume& operator[](std::size_t c) const { return channels_[c]; }

    /// Index of the named channel, or size() when absent.
    std::size_t index_of(const std::string& name) const
    {
        return static_cast<std::size_t>(std::find(names_.begin(), names_.end(), name) - names_.begin());
    }

    bool has(const std::string& name) const { return index_of(name) < size(); }

    void push_back(std::string name, Volume v)
    {
        if (!channels_.empty())
            require_same_grid(grid(), v.grid(), "channel stack");
        names_.push_back(std::move(name));
        channels_.push_back(std::move(v));
    }

  private:
    std::vector<std::string> names_;
    std::vector<Volume> channels_;
};

struct PosteriorTag
{
};
struct LogitTag
{
};
struct ProbabilityTag
{
};

/// Per-class tissue probabilities; per-voxel sums lie in [0, 1].
using PosteriorStack = ChannelStack<PosteriorTag>;
using LogitStack = ChannelStack<LogitTag>;
using ProbabilityStack = ChannelStack<ProbabilityTag>;

/// Throws when a value leaves [0,1] or a voxel's class sum exceeds 1 + tol.
inline void validate_posteriors(const PosteriorStack& s, double tol = 1e-4)
{
    if (s.empty())
        return;
    const std::size_t n = s.grid().voxel_count();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        for (std::size_t c = 0; c < s.size(); ++c) {
            const double p = s[c][i];
            if (!(p >= -tol && p <= 1.0 + tol))
                throw InvalidArgumentError("posterior value outside [0,1] in class " + s.names()[c]);
            sum += p;
        }
        if (sum > 1.0 + tol)
            throw InvalidArgumentError("posterior stack is not sub-stochastic");
    }
}

} // namespace synthstroke
