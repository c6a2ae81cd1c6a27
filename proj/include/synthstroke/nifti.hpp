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
 * Single-file NIfTI-1 (.nii / .nii.gz) reading and writing.
 *
 * The 348-byte header is (de)serialized field by field at its fixed byte
 * offsets, so the code is independent of struct packing and host byte order.
 * Files of either endianness are read; files are always written
 * little-endian with vox_offset 352 and both qform and sform set from the
 * volume geometry.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <zlib.h>

#include "synthstroke/volume.hpp"

namespace synthstroke {

class NiftiError : public Error
{
  public:
    using Error::Error;
};

class NiftiBadMagicError : public NiftiError
{
  public:
    using NiftiError::NiftiError;
};

class NiftiUnsupportedDatatypeError : public NiftiError
{
  public:
    using NiftiError::NiftiError;
};

class NiftiTruncatedError : public NiftiError
{
  public:
    using NiftiError::NiftiError;
};

class NiftiIoError : public NiftiError
{
  public:
    using NiftiError::NiftiError;
};

enum class NiftiDatatype : std::int16_t
{
    uint8 = 2,
    int16 = 4,
    int32 = 8,
    float32 = 16,
    float64 = 64
};

inline int bits_of(NiftiDatatype t)
{
    switch (t) {
    case NiftiDatatype::uint8: return 8;
    case NiftiDatatype::int16: return 16;
    case NiftiDatatype::int32: return 32;
    case NiftiDatatype::float32: return 32;
    case NiftiDatatype::float64: return 64;
    }
    throw NiftiUnsupportedDatatypeError("unsupported NIfTI datatype");
}

inline bool is_supported_datatype(std::int16_t code)
{
    return code == 2 || code == 4 || code == 8 || code == 16 || code == 64;
}

struct NiftiHeader
{
    std::int32_t sizeof_hdr = 348;
    std::array<std::int16_t, 8> dim{};
    std::int16_t datatype = 16;
    std::int16_t bitpix = 32;
    std::array<float, 8> pixdim{};
    float vox_offset = 352.0f;
    float scl_slope = 1.0f;
    float scl_inter = 0.0f;
    std::uint8_t xyzt_units = 2;
    std::string descrip;
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    float quatern_b = 0, quatern_c = 0, quatern_d = 0;
    float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
    std::array<float, 4> srow_x{}, srow_y{}, srow_z{};
    std::array<char, 4> magic{'n', '+', '1', '\0'};
    bool big_endian = false;
};

namespace nifti_detail {

inline constexpr std::size_t kHeaderSize = 348;
inline constexpr std::size_t kDataOffset = 352;

template <class T>
T byteswap_value(T v)
{
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

class ByteReader
{
  public:
    ByteReader(const unsigned char* p, bool swap) : p_(p), swap_(swap) {}

    template <class T>
    T get(std::size_t off) const
    {
        T v;
        std::memcpy(&v, p_ + off, sizeof(T));
        const bool host_big = std::endian::native == std::endian::big;
        return (swap_ != host_big) ? byteswap_value(v) : v;
    }

  private:
    const unsigned char* p_;
    bool swap_; // file is big-endian
};

class ByteWriter
{
  public:
    explicit ByteWriter(unsigned char* p) : p_(p) {}

    template <class T>
    void put(std::size_t off, T v)
    {
        if constexpr (std::endian::native == std::endian::big)
            v = byteswap_value(v);
        std::memcpy(p_ + off, &v, sizeof(T));
    }

  private:
    unsigned char* p_;
};

inline NiftiHeader parse_header(const unsigned char* buf)
{
    std::int32_t le_size;
    std::memcpy(&le_size, buf, 4);
    if constexpr (std::endian::native == std::endian::big)
        le_size = byteswap_value(le_size);
    bool big = false;
    if (le_size != 348) {
        if (byteswap_value(le_size) == 348)
            big = true;
        else
            throw NiftiBadMagicError("NIfTI header size field is not 348");
    }
    ByteReader r(buf, big);
    NiftiHeader h;
    h.big_endian = big;
    h.sizeof_hdr = 348;
    for (int i = 0; i < 8; ++i)
        h.dim[i] = r.get<std::int16_t>(40 + 2 * i);
    h.datatype = r.get<std::int16_t>(70);
    h.bitpix = r.get<std::int16_t>(72);
    for (int i = 0; i < 8; ++i)
        h.pixdim[i] = r.get<float>(76 + 4 * i);
    h.vox_offset = r.get<float>(108);
    h.scl_slope = r.get<float>(112);
    h.scl_inter = r.get<float>(116);
    h.xyzt_units = buf[123];
    h.descrip.assign(reinterpret_cast<const char*>(buf + 148), strnlen(reinterpret_cast<const char*>(buf + 148), 80));
    h.qform_code = r.get<std::int16_t>(252);
    h.sform_code = r.get<std::int16_t>(254);
    h.quatern_b = r.get<float>(256);
    h.quatern_c = r.get<float>(260);
    h.quatern_d = r.get<float>(264);
    h.qoffset_x = r.get<float>(268);
    h.qoffset_y = r.get<float>(272);
    h.qoffset_z = r.get<float>(276);
    for (int i = 0; i < 4; ++i) {
        h.srow_x[i] = r.get<float>(280 + 4 * i);
        h.srow_y[i] = r.get<float>(296 + 4 * i);
        h.srow_z[i] = r.get<float>(312 + 4 * i);
    }
    std::memcpy(h.magic.data(), buf + 344, 4);
    return h;
}

inline std::array<unsigned char, kDataOffset> serialize_header(const NiftiHeader& h)
{
    std::array<unsigned char, kDataOffset> buf{};
    ByteWriter w(buf.data());
    w.put<std::int32_t>(0, 348);
    buf[38] = 'r';
    for (int i = 0; i < 8; ++i)
        w.put<std::int16_t>(40 + 2 * i, h.dim[i]);
    w.put<std::int16_t>(70, h.datatype);
    w.put<std::int16_t>(72, h.bitpix);
    for (int i = 0; i < 8; ++i)
        w.put<float>(76 + 4 * i, h.pixdim[i]);
    w.put<float>(108, h.vox_offset);
    w.put<float>(112, h.scl_slope);
    w.put<float>(116, h.scl_inter);
    buf[123] = h.xyzt_units;
    std::memcpy(buf.data() + 148, h.descrip.data(), std::min<std::size_t>(h.descrip.size(), 79));
    w.put<std::int16_t>(252, h.qform_code);
    w.put<std::int16_t>(254, h.sform_code);
    w.put<float>(256, h.quatern_b);
    w.put<float>(260, h.quatern_c);
    w.put<float>(264, h.quatern_d);
    w.put<float>(268, h.qoffset_x);
    w.put<float>(272, h.qoffset_y);
    w.put<float>(276, h.qoffset_z);
    for (int i = 0; i < 4; ++i) {
        w.put<float>(280 + 4 * i, h.srow_x[i]);
        w.put<float>(296 + 4 * i, h.srow_y[i]);
        w.put<float>(312 + 4 * i, h.srow_z[i]);
    }
    std::memcpy(buf.data() + 344, h.magic.data(), 4);
    return buf;
}

// Orthonormalizes the columns of m (Gram-Schmidt, x then y then z).
inline Mat3 orthonormal_columns(Mat3 m)
{
    for (int c = 0; c < 3; ++c) {
        for (int p = 0; p < c; ++p) {
            double d = 0;
            for (int r = 0; r < 3; ++r)
                d += m[r][c] * m[r][p];
            for (int r = 0; r < 3; ++r)
                m[r][c] -= d * m[r][p];
        }
        double n = 0;
        for (int r = 0; r < 3; ++r)
            n += m[r][c] * m[r][c];
        n = std::sqrt(n);
        if (n < 1e-12)
            throw NiftiError("degenerate orientation in NIfTI header");
        for (int r = 0; r < 3; ++r)
            m[r][c] /= n;
    }
    return m;
}

inline Grid grid_from_header(const NiftiHeader& h, const Shape3& shape)
{
    Grid g;
    g.shape = shape;
    auto pix = [&](int i) {
        const double v = std::abs(static_cast<double>(h.pixdim[i]));
        return v > 0 ? v : 1.0;
    };
    if (h.sform_code > 0) {
        const std::array<const std::array<float, 4>*, 3> rows{&h.srow_x, &h.srow_y, &h.srow_z};
        Mat3 m{};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c)
                m[r][c] = (*rows[r])[c];
            g.origin[r] = (*rows[r])[3];
        }
        for (int c = 0; c < 3; ++c) {
            const double n = std::sqrt(m[0][c] * m[0][c] + m[1][c] * m[1][c] + m[2][c] * m[2][c]);
            if (n <= 0)
                throw NiftiError("degenerate sform in NIfTI header");
            g.spacing[c] = n;
        }
        g.direction = orthonormal_columns(m);
    } else if (h.qform_code > 0) {
        const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
        const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
        Mat3 r{{{a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
                {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
                {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b}}};
        const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
        for (int row = 0; row < 3; ++row)
            r[row][2] *= qfac;
        g.direction = orthonormal_columns(r);
        g.spacing = {pix(1), pix(2), pix(3)};
        g.origin = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
    } else {
        g.spacing = {pix(1), pix(2), pix(3)};
    }
    return g;
}

// Rotation matrix to quaternion (b, c, d) and qfac, following the reference
// nifti1_io conversion.
inline void set_qform(NiftiHeader& h, const Mat3& dir)
{
    Mat3 r = dir;
    double qfac = 1.0;
    if (determinant(r) < 0) {
        qfac = -1.0;
        for (int row = 0; row < 3; ++row)
            r[row][2] = -r[row][2];
    }
    double a = r[0][0] + r[1][1] + r[2][2] + 1.0, b, c, d;
    if (a > 0.5) {
        a = 0.5 * std::sqrt(a);
        b = 0.25 * (r[2][1] - r[1][2]) / a;
        c = 0.25 * (r[0][2] - r[2][0]) / a;
        d = 0.25 * (r[1][0] - r[0][1]) / a;
    } else {
        const double xd = 1.0 + r[0][0] - (r[1][1] + r[2][2]);
        const double yd = 1.0 + r[1][1] - (r[0][0] + r[2][2]);
        const double zd = 1.0 + r[2][2] - (r[0][0] + r[1][1]);
        if (xd > 1.0) {
            b = 0.5 * std::sqrt(xd);
            c = 0.25 * (r[0][1] + r[1][0]) / b;
            d = 0.25 * (r[0][2] + r[2][0]) / b;
            a = 0.25 * (r[2][1] - r[1][2]) / b;
        } else if (yd > 1.0) {
            c = 0.5 * std::sqrt(yd);
            b = 0.25 * (r[0][1] + r[1][0]) / c;
            d = 0.25 * (r[1][2] + r[2][1]) / c;
            a = 0.25 * (r[0][2] - r[2][0]) / c;
        } else {
            d = 0.5 * std::sqrt(zd);
            b = 0.25 * (r[0][2] + r[2][0]) / d;
            c = 0.25 * (r[1][2] + r[2][1]) / d;
            a = 0.25 * (r[1][0] - r[0][1]) / d;
        }
        if (a < 0) {
            b = -b;
            c = -c;
            d = -d;
        }
    }
    h.quatern_b = static_cast<float>(b);
    h.quatern_c = static_cast<float>(c);
    h.quatern_d = static_cast<float>(d);
    h.pixdim[0] = static_cast<float>(qfac);
}

inline bool has_gz_extension(const std::filesystem::path& p)
{
    return p.extension() == ".gz";
}

// Reads the whole file, inflating gzip transparently (zlib passes plain files
// through unchanged).
inline std::vector<unsigned char> slurp(const std::filesystem::path& path)
{
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f)
        throw NiftiIoError("cannot open " + path.string());
    std::vector<unsigned char> out;
    std::array<unsigned char, 1 << 16> chunk;
    for (;;) {
        const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
        if (n < 0) {
            int err = 0;
            const char* msg = gzerror(f, &err);
            gzclose(f);
            if (err == Z_BUF_ERROR || err == Z_DATA_ERROR)
                throw NiftiTruncatedError("corrupt or truncated gzip stream in " + path.string());
            throw NiftiIoError(std::string("read error: ") + msg);
        }
        if (n == 0)
            break;
        out.insert(out.end(), chunk.begin(), chunk.begin() + n);
    }
    int err = 0;
    gzerror(f, &err);
    gzclose(f);
    if (err == Z_BUF_ERROR)
        throw NiftiTruncatedError("truncated gzip stream in " + path.string());
    return out;
}

template <class Raw>
double load_raw(const unsigned char* p, bool swap)
{
    Raw v;
    std::memcpy(&v, p, sizeof(Raw));
    const bool host_big = std::endian::native == std::endian::big;
    if (swap != host_big)
        v = byteswap_value(v);
    return static_cast<double>(v);
}

template <class Raw>
void store_raw(unsigned char* p, Raw v)
{
    if constexpr (std::endian::native == std::endian::big)
        v = byteswap_value(v);
    std::memcpy(p, &v, sizeof(Raw));
}

template <class Raw>
Raw saturate(double v)
{
    if constexpr (std::is_integral_v<Raw>) {
        const double r = std::nearbyint(v);
        const double lo = static_cast<double>(std::numeric_limits<Raw>::min());
        const double hi = static_cast<double>(std::numeric_limits<Raw>::max());
        return static_cast<Raw>(std::clamp(r, lo, hi));
    } else {
        return static_cast<Raw>(v);
    }
}

} // namespace nifti_detail

template <class T>
struct NiftiImage
{
    Image<T> image;
    NiftiHeader header;
};

/// Reads a single-file NIfTI-1 volume. Scaling is applied when scl_slope is
/// non-zero; geometry comes from the sform when sform_code > 0, else the qform,
/// else pixdim alone.
template <class T = float>
NiftiImage<T> read_nifti(const std::filesystem::path& path)
{
    using namespace nifti_detail;
    const std::vector<unsigned char> bytes = slurp(path);
    if (bytes.size() < kHeaderSize)
        throw NiftiTruncatedError("file shorter than a NIfTI-1 header: " + path.string());
    NiftiHeader h = parse_header(bytes.data());
    if (std::memcmp(h.magic.data(), "n+1\0", 4) != 0)
        throw NiftiBadMagicError("not a single-file NIfTI-1 image (magic) : " + path.string());
    if (h.dim[0] < 1 || h.dim[0] > 7)
        throw NiftiError("NIfTI dim[0] outside [1,7]");
    if (!is_supported_datatype(h.datatype))
        throw NiftiUnsupportedDatatypeError("unsupported NIfTI datatype code " + std::to_string(h.datatype));
    Shape3 shape{1, 1, 1};
    for (int a = 0; a < 3 && a < h.dim[0]; ++a) {
        if (h.dim[a + 1] < 1)
            throw NiftiError("NIfTI dimension must be positive");
        shape[a] = static_cast<std::size_t>(h.dim[a + 1]);
    }
    for (int a = 4; a <= h.dim[0]; ++a)
        if (h.dim[a] > 1)
            throw NiftiError("NIfTI volumes with more than three dimensions are not supported");
    const auto dtype = static_cast<NiftiDatatype>(h.datatype);
    const std::size_t bytes_per = static_cast<std::size_t>(bits_of(dtype)) / 8;
    const std::size_t n = shape[0] * shape[1] * shape[2];
    const auto offset = static_cast<std::size_t>(h.vox_offset);
    if (offset < kHeaderSize || bytes.size() < offset + n * bytes_per)
        throw NiftiTruncatedError("NIfTI payload truncated: " + path.string());

    Image<T> img(grid_from_header(h, shape));
    const bool scale = h.scl_slope != 0 && std::isfinite(h.scl_slope) && !(h.scl_slope == 1 && h.scl_inter == 0);
    const unsigned char* p = bytes.data() + offset;
    for (std::size_t i = 0; i < n; ++i, p += bytes_per) {
        double v;
        switch (dtype) {
        case NiftiDatatype::uint8: v = load_raw<std::uint8_t>(p, h.big_endian); break;
        case NiftiDatatype::int16: v = load_raw<std::int16_t>(p, h.big_endian); break;
        case NiftiDatatype::int32: v = load_raw<std::int32_t>(p, h.big_endian); break;
        case NiftiDatatype::float32: v = load_raw<float>(p, h.big_endian); break;
        default: v = load_raw<double>(p, h.big_endian); break;
        }
        if (scale)
            v = v * h.scl_slope + h.scl_inter;
        img[i] = static_cast<T>(v);
    }
    return {std::move(img), std::move(h)};
}

/// Header a volume would be written with.
template <class T>
NiftiHeader make_header(const Image<T>& vol, NiftiDatatype datatype)
{
    NiftiHeader h;
    const auto& g = vol.grid();
    h.dim = {3, static_cast<std::int16_t>(g.shape[0]), static_cast<std::int16_t>(g.shape[1]),
             static_cast<std::int16_t>(g.shape[2]), 1, 1, 1, 1};
    h.datatype = static_cast<std::int16_t>(datatype);
    h.bitpix = static_cast<std::int16_t>(bits_of(datatype));
    h.pixdim = {1, static_cast<float>(g.spacing[0]), static_cast<float>(g.spacing[1]),
                static_cast<float>(g.spacing[2]), 0, 0, 0, 0};
    h.vox_offset = static_cast<float>(nifti_detail::kDataOffset);
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.descrip = "synthstroke";
    h.qform_code = 1;
    h.sform_code = 1;
    nifti_detail::set_qform(h, g.direction);
    h.qoffset_x = static_cast<float>(g.origin[0]);
    h.qoffset_y = static_cast<float>(g.origin[1]);
    h.qoffset_z = static_cast<float>(g.origin[2]);
    const Mat3 m = g.index_to_world_linear();
    std::array<std::array<float, 4>*, 3> rows{&h.srow_x, &h.srow_y, &h.srow_z};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
            (*rows[r])[c] = static_cast<float>(m[r][c]);
        (*rows[r])[3] = static_cast<float>(g.origin[r]);
    }
    return h;
}

/// Writes a little-endian single-file NIfTI-1; a ".gz" extension selects gzip.
template <class T>
void write_nifti(const Image<T>& vol, const std::filesystem::path& path, NiftiDatatype datatype = NiftiDatatype::float32)
{
    using namespace nifti_detail;
    for (auto n : vol.shape())
        if (n > 32767)
            throw NiftiError("dimension exceeds NIfTI-1 limit");
    const NiftiHeader h = make_header(vol, datatype);
    const auto head = serialize_header(h);
    const std::size_t bytes_per = static_cast<std::size_t>(bits_of(datatype)) / 8;
    std::vector<unsigned char> buf(head.begin(), head.end());
    buf.resize(kDataOffset + vol.size() * bytes_per);
    unsigned char* p = buf.data() + kDataOffset;
    for (std::size_t i = 0; i < vol.size(); ++i, p += bytes_per) {
        const double v = static_cast<double>(vol[i]);
        switch (datatype) {
        case NiftiDatatype::uint8: store_raw(p, saturate<std::uint8_t>(v)); break;
        case NiftiDatatype::int16: store_raw(p, saturate<std::int16_t>(v)); break;
        case NiftiDatatype::int32: store_raw(p, saturate<std::int32_t>(v)); break;
        case NiftiDatatype::float32: store_raw(p, static_cast<float>(v)); break;
        case NiftiDatatype::float64: store_raw(p, v); break;
        }
    }
    if (has_gz_extension(path)) {
        gzFile f = gzopen(path.string().c_str(), "wb6");
        if (!f)
            throw NiftiIoError("cannot open for writing: " + path.string());
        std::size_t off = 0;
        while (off < buf.size()) {
            const auto chunk = static_cast<unsigned>(std::min<std::size_t>(buf.size() - off, 1u << 30));
            if (gzwrite(f, buf.data() + off, chunk) != static_cast<int>(chunk)) {
                gzclose(f);
                throw NiftiIoError("write failed: " + path.string());
            }
            off += chunk;
        }
        if (gzclose(f) != Z_OK)
            throw NiftiIoError("write failed: " + path.string());
    } else {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw NiftiIoError("cannot open for writing: " + path.string());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out)
            throw NiftiIoError("write failed: " + path.string());
    }
}

/// Permutes and flips index axes so that axis k points mostly along world +k
/// (R, A, S). Only voxel order and geometry change; no interpolation.
template <class T>
Image<T> reorient_ras(const Image<T>& vol)
{
    const Grid& g = vol.grid();
    // source axis feeding each world axis, and its sign
    std::array<int, 3> src_axis{-1, -1, -1};
    std::array<bool, 3> negate{};
    std::array<bool, 3> used{};
    for (int a = 0; a < 3; ++a) {
        int best = -1;
        double best_v = 0;
        for (int w = 0; w < 3; ++w) {
            const double v = std::abs(g.direction[w][a]);
            if (v > best_v) {
                best_v = v;
                best = w;
            }
        }
        if (best < 0 || used[best] || best_v < 1e-6)
            throw InvalidArgumentError("reorient_ras: degenerate orientation matrix");
        used[best] = true;
        src_axis[best] = a;
        negate[best] = g.direction[best][a] < 0;
    }
    if (src_axis == std::array<int, 3>{0, 1, 2} && !negate[0] && !negate[1] && !negate[2])
        return vol;

    Grid out_g;
    Vec3 first{}; // source index of new voxel (0,0,0)
    for (int k = 0; k < 3; ++k) {
        const int a = src_axis[k];
        out_g.shape[k] = g.shape[a];
        out_g.spacing[k] = g.spacing[a];
        for (int r = 0; r < 3; ++r)
            out_g.direction[r][k] = negate[k] ? -g.direction[r][a] : g.direction[r][a];
        first[a] = negate[k] ? static_cast<double>(g.shape[a] - 1) : 0.0;
    }
    out_g.origin = g.world_of(first);
    Image<T> out(out_g);
    const auto& s = out_g.shape;
    std::size_t i = 0;
    std::array<std::size_t, 3> src{};
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x, ++i) {
                const std::array<std::size_t, 3> idx{x, y, z};
                for (int k = 0; k < 3; ++k)
                    src[src_axis[k]] = negate[k] ? s[k] - 1 - idx[k] : idx[k];
                out[i] = vol.at(src[0], src[1], src[2]);
            }
    return out;
}

} // namespace synthstroke
