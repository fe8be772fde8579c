#include "parcelqc/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <type_traits>
#include <vector>

#include "parcelqc/error.hpp"

namespace parcelqc::nifti {

namespace {

// On-disk layout per the NIfTI-1 standard; natural alignment gives exactly
// 348 bytes, which the reader also uses to detect byte order.
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1;
    float intent_p2;
    float intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max;
    float cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax;
    std::int32_t glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b;
    float quatern_c;
    float quatern_d;
    float qoffset_x;
    float qoffset_y;
    float qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

enum DataTypeCode : std::int16_t {
    kDtUint8 = 2,
    kDtInt16 = 4,
    kDtInt32 = 8,
    kDtFloat32 = 16,
    kDtFloat64 = 64,
    kDtUint16 = 512,
};

constexpr std::int16_t kUnitsMm = 2;

template <class T>
void byteswap_inplace(T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (sizeof(T) == 2) {
        std::uint16_t u;
        std::memcpy(&u, &value, 2);
        u = __builtin_bswap16(u);
        std::memcpy(&value, &u, 2);
    } else if constexpr (sizeof(T) == 4) {
        std::uint32_t u;
        std::memcpy(&u, &value, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&value, &u, 4);
    } else if constexpr (sizeof(T) == 8) {
        std::uint64_t u;
        std::memcpy(&u, &value, 8);
        u = __builtin_bswap64(u);
        std::memcpy(&value, &u, 8);
    }
}

void byteswap_header(Nifti1Header& h) {
    byteswap_inplace(h.sizeof_hdr);
    byteswap_inplace(h.extents);
    byteswap_inplace(h.session_error);
    for (auto& v : h.dim) byteswap_inplace(v);
    byteswap_inplace(h.intent_p1);
    byteswap_inplace(h.intent_p2);
    byteswap_inplace(h.intent_p3);
    byteswap_inplace(h.intent_code);
    byteswap_inplace(h.datatype);
    byteswap_inplace(h.bitpix);
    byteswap_inplace(h.slice_start);
    for (auto& v : h.pixdim) byteswap_inplace(v);
    byteswap_inplace(h.vox_offset);
    byteswap_inplace(h.scl_slope);
    byteswap_inplace(h.scl_inter);
    byteswap_inplace(h.slice_end);
    byteswap_inplace(h.cal_max);
    byteswap_inplace(h.cal_min);
    byteswap_inplace(h.slice_duration);
    byteswap_inplace(h.toffset);
    byteswap_inplace(h.glmax);
    byteswap_inplace(h.glmin);
    byteswap_inplace(h.qform_code);
    byteswap_inplace(h.sform_code);
    byteswap_inplace(h.quatern_b);
    byteswap_inplace(h.quatern_c);
    byteswap_inplace(h.quatern_d);
    byteswap_inplace(h.qoffset_x);
    byteswap_inplace(h.qoffset_y);
    byteswap_inplace(h.qoffset_z);
    for (auto& v : h.srow_x) byteswap_inplace(v);
    for (auto& v : h.srow_y) byteswap_inplace(v);
    for (auto& v : h.srow_z) byteswap_inplace(v);
}

// zlib reads gzip streams and plain files alike, so one path covers .nii and
// .nii.gz.
class GzReader {
public:
    explicit GzReader(const std::string& path) : path_(path), file_(gzopen(path.c_str(), "rb")) {
        if (file_ == nullptr) throw Error("cannot open file: " + path);
    }
    ~GzReader() {
        if (file_ != nullptr) gzclose(file_);
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    void read_exact(void* dst, std::size_t bytes, const char* what) {
        auto* p = static_cast<unsigned char*>(dst);
        while (bytes > 0) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(bytes, 1u << 30));
            const int got = gzread(file_, p, chunk);
            if (got <= 0) throw Error(std::string("truncated ") + what + ": " + path_);
            p += got;
            bytes -= static_cast<std::size_t>(got);
        }
    }

    void skip(std::size_t bytes) {
        std::vector<unsigned char> scratch(std::min<std::size_t>(bytes, 1 << 16));
        while (bytes > 0) {
            const std::size_t chunk = std::min(bytes, scratch.size());
            read_exact(scratch.data(), chunk, "header extension");
            bytes -= chunk;
        }
    }

private:
    std::string path_;
    gzFile file_ = nullptr;
};

struct RawImage {
    Nifti1Header header;
    VolumeGeometry geometry;
    std::vector<unsigned char> payload;
    bool swapped = false;
};

VolumeGeometry decode_geometry(const Nifti1Header& h, const std::string& path) {
    VolumeGeometry g;
    for (int i = 0; i < 3; ++i) {
        g.dims[i] = h.dim[i + 1];
        const double sp = h.pixdim[i + 1];
        if (!(sp > 0.0) || !std::isfinite(sp))
            throw Error("non-positive voxel spacing in " + path);
        g.spacing[i] = sp;
    }
    if (h.sform_code > 0) {
        for (int c = 0; c < 4; ++c) {
            g.affine[0][c] = h.srow_x[c];
            g.affine[1][c] = h.srow_y[c];
            g.affine[2][c] = h.srow_z[c];
        }
    } else if (h.qform_code > 0) {
        const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
        const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
        const double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
        const double R[3][3] = {
            {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
            {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
            {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
        const double off[3] = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
        for (int r = 0; r < 3; ++r) {
            g.affine[r][0] = R[r][0] * g.spacing[0];
            g.affine[r][1] = R[r][1] * g.spacing[1];
            g.affine[r][2] = R[r][2] * g.spacing[2] * qfac;
            g.affine[r][3] = off[r];
        }
    } else {
        g = VolumeGeometry::with_spacing(g.dims, g.spacing);
    }
    g.affine[3] = {0.0, 0.0, 0.0, 1.0};
    g.validate();
    return g;
}

std::size_t bytes_per_voxel(std::int16_t datatype, const std::string& path) {
    switch (datatype) {
        case kDtUint8: return 1;
        case kDtInt16:
        case kDtUint16: return 2;
        case kDtInt32:
        case kDtFloat32: return 4;
        case kDtFloat64: return 8;
        default:
            throw Error("unsupported datatype code " + std::to_string(datatype) + " in " + path);
    }
}

RawImage read_raw(const std::string& path) {
    GzReader in(path);
    RawImage img;
    Nifti1Header& h = img.header;
    in.read_exact(&h, sizeof(h), "header");

    if (h.sizeof_hdr != 348) {
        byteswap_inplace(h.sizeof_hdr);
        if (h.sizeof_hdr != 348) throw Error("not a NIfTI-1 file (bad header size): " + path);
        byteswap_inplace(h.sizeof_hdr); // restore; the full swap happens below
        img.swapped = true;
    }
    if (std::memcmp(h.magic, "n+1\0", 4) != 0) {
        if (std::memcmp(h.magic, "ni1\0", 4) == 0)
            throw Error("two-file NIfTI (.hdr/.img) is not supported: " + path);
        throw Error("bad magic in " + path);
    }
    if (img.swapped) byteswap_header(h);

    const int nd = h.dim[0];
    if (nd < 3 || nd > 7) throw Error("not a 3D volume (dim[0] = " + std::to_string(nd) + "): " + path);
    for (int i = 4; i <= nd; ++i)
        if (h.dim[i] > 1)
            throw Error("not a 3D volume (dim[" + std::to_string(i) + "] = " +
                        std::to_string(h.dim[i]) + "): " + path);
    for (int i = 1; i <= 3; ++i)
        if (h.dim[i] < 1) throw Error("bad dimension in " + path);

    img.geometry = decode_geometry(h, path);

    const std::size_t bpv = bytes_per_voxel(h.datatype, path);
    if (h.vox_offset < 348.0f) throw Error("bad vox_offset in " + path);
    in.skip(static_cast<std::size_t>(h.vox_offset) - sizeof(h));

    img.payload.resize(img.geometry.voxel_count() * bpv);
    in.read_exact(img.payload.data(), img.payload.size(), "payload");
    return img;
}

template <class T, class Fn>
void for_each_value(const RawImage& img, Fn&& fn) {
    const std::size_t n = img.geometry.voxel_count();
    const auto* bytes = img.payload.data();
    for (std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, bytes + i * sizeof(T), sizeof(T));
        if (img.swapped) byteswap_inplace(v);
        fn(i, v);
    }
}

template <class Fn>
void decode_values(const RawImage& img, const std::string& path, Fn&& fn) {
    switch (img.header.datatype) {
        case kDtUint8: for_each_value<std::uint8_t>(img, fn); break;
        case kDtInt16: for_each_value<std::int16_t>(img, fn); break;
        case kDtInt32: for_each_value<std::int32_t>(img, fn); break;
        case kDtUint16: for_each_value<std::uint16_t>(img, fn); break;
        case kDtFloat32: for_each_value<float>(img, fn); break;
        case kDtFloat64: for_each_value<double>(img, fn); break;
        default: throw Error("unsupported datatype in " + path);
    }
}

struct Scaling {
    bool apply = false;
    double slope = 1.0;
    double inter = 0.0;
};

Scaling decode_scaling(const Nifti1Header& h) {
    Scaling s;
    const double slope = h.scl_slope;
    if (slope != 0.0 && std::isfinite(slope)) {
        s.apply = !(slope == 1.0 && h.scl_inter == 0.0f);
        s.slope = slope;
        s.inter = std::isfinite(h.scl_inter) ? h.scl_inter : 0.0;
    }
    return s;
}

Nifti1Header make_header(const VolumeGeometry& g, std::int16_t datatype, std::int16_t bitpix) {
    for (int d : g.dims)
        if (d > std::numeric_limits<std::int16_t>::max())
            throw Error("dimension too large for NIfTI-1");
    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    for (int i = 0; i < 3; ++i) h.dim[i + 1] = static_cast<std::int16_t>(g.dims[i]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = datatype;
    h.bitpix = bitpix;
    h.pixdim[0] = 1.0f;
    for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(g.spacing[i]);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = kUnitsMm;
    h.qform_code = 0;
    h.sform_code = 2; // aligned to a common space
    for (int c = 0; c < 4; ++c) {
        h.srow_x[c] = static_cast<float>(g.affine[0][c]);
        h.srow_y[c] = static_cast<float>(g.affine[1][c]);
        h.srow_z[c] = static_cast<float>(g.affine[2][c]);
    }
    std::strncpy(h.descrip, "parcelqc", sizeof(h.descrip) - 1);
    std::memcpy(h.magic, "n+1\0", 4);
    return h;
}

void write_bytes(const std::string& path, const Nifti1Header& header, const void* payload,
                 std::size_t payload_bytes) {
    Nifti1Header h = header;
    if constexpr (std::endian::native == std::endian::big) byteswap_header(h);
    const char extender[4] = {0, 0, 0, 0};

    const bool gz = path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (f == nullptr) throw Error("cannot write file: " + path);
        bool ok = gzwrite(f, &h, sizeof(h)) == static_cast<int>(sizeof(h)) &&
                  gzwrite(f, extender, 4) == 4;
        std::size_t off = 0;
        const auto* p = static_cast<const unsigned char*>(payload);
        while (ok && off < payload_bytes) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(payload_bytes - off, 1u << 30));
            ok = gzwrite(f, p + off, chunk) == static_cast<int>(chunk);
            off += chunk;
        }
        ok = gzclose(f) == Z_OK && ok;
        if (!ok) throw Error("write failed: " + path);
    } else {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + path);
        out.write(reinterpret_cast<const char*>(&h), sizeof(h));
        out.write(extender, 4);
        out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
        out.flush();
        if (!out) throw Error("write failed: " + path);
    }
}

} // namespace

Volume3D read_volume(const std::string& path) {
    const RawImage img = read_raw(path);
    const Scaling sc = decode_scaling(img.header);

    Volume3D v;
    v.geometry = img.geometry;
    v.voxels.resize(img.geometry.voxel_count());
    decode_values(img, path, [&](std::size_t i, auto raw) {
        double value = static_cast<double>(raw);
        if (sc.apply) value = sc.slope * value + sc.inter;
        v.voxels[i] = static_cast<float>(value);
    });
    v.validate();
    return v;
}

LabelMap read_labelmap(const std::string& path) {
    const RawImage img = read_raw(path);
    const Scaling sc = decode_scaling(img.header);

    LabelMap m;
    m.geometry = img.geometry;
    m.labels.resize(img.geometry.voxel_count());
    decode_values(img, path, [&](std::size_t i, auto raw) {
        double value = static_cast<double>(raw);
        if (sc.apply) value = sc.slope * value + sc.inter;
        const double rounded = std::round(value);
        if (std::fabs(value - rounded) > 1e-6)
            throw Error("non-integral label " + std::to_string(value) + " in " + path);
        if (rounded < 0.0) throw Error("negative label in " + path);
        if (rounded > 65535.0) throw Error("label exceeds 16-bit range in " + path);
        m.labels[i] = static_cast<std::uint16_t>(rounded);
    });
    m.validate();
    return m;
}

void write_volume(const Volume3D& v, const std::string& path) {
    v.validate();
    const Nifti1Header h = make_header(v.geometry, kDtFloat32, 32);
    if constexpr (std::endian::native == std::endian::big) {
        std::vector<float> le(v.voxels);
        for (auto& x : le) byteswap_inplace(x);
        write_bytes(path, h, le.data(), le.size() * sizeof(float));
    } else {
        write_bytes(path, h, v.voxels.data(), v.voxels.size() * sizeof(float));
    }
}

void write_volume(const LabelMap& m, const std::string& path) {
    m.validate();
    const Nifti1Header h = make_header(m.geometry, kDtUint16, 16);
    if constexpr (std::endian::native == std::endian::big) {
        std::vector<std::uint16_t> le(m.labels);
        for (auto& x : le) byteswap_inplace(x);
        write_bytes(path, h, le.data(), le.size() * sizeof(std::uint16_t));
    } else {
        write_bytes(path, h, m.labels.data(), m.labels.size() * sizeof(std::uint16_t));
    }
}

} // namespace parcelqc::nifti
