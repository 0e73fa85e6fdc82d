#include "risnoma/dataset_io.hpp"

#include "risnoma/binary_io.hpp"
#include "risnoma/error.hpp"

namespace risnoma {

namespace {

constexpr std::string_view kMagic = "RNDS";
constexpr std::uint64_t kComplexBytes = 16;

void put_vector(io::ByteWriter& w, const CVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) w.c128(v[i]);
}

CVector get_vector(io::ByteReader& r, std::uint32_t len, const char* what) {
    CVector v(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = r.c128(what);
    return v;
}

} // namespace

std::vector<char> encode_dataset(const Dataset& dataset) {
    io::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(dataset.bs_antennas()));
    w.u32(static_cast<std::uint32_t>(dataset.ris_elements()));
    w.u32(static_cast<std::uint32_t>(dataset.size()));
    w.u64(dataset.seed());
    const CMatrix& h = dataset.bs_ris();
    for (Eigen::Index r = 0; r < h.rows(); ++r)
        for (Eigen::Index c = 0; c < h.cols(); ++c) w.c128(h(r, c));
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        const UserLinks& l = dataset.links(s);
        put_vector(w, l.direct[0]);
        put_vector(w, l.direct[1]);
        put_vector(w, l.ris_user[0]);
        put_vector(w, l.ris_user[1]);
    }
    return w.buffer();
}

Dataset decode_dataset(std::vector<char> bytes) {
    io::ByteReader r(std::move(bytes));
    r.expect_magic(kMagic, "dataset header");
    const std::uint64_t version_at = r.offset();
    const std::uint32_t version = r.u32("dataset header");
    if (version != kDatasetVersion) {
        throw FormatError("unsupported dataset version " + std::to_string(version), version_at);
    }
    const std::uint64_t dims_at = r.offset();
    const std::uint32_t m = r.u32("dataset header");
    const std::uint32_t n = r.u32("dataset header");
    const std::uint32_t s = r.u32("dataset header");
    const std::uint64_t seed = r.u64("dataset header");
    if (m == 0 || n == 0) {
        throw FormatError("dataset header has zero dimension (M=" + std::to_string(m) +
                              ", N=" + std::to_string(n) + ")",
                          dims_at);
    }

    const std::uint64_t record = kComplexBytes * (2ULL * m + 2ULL * n);
    const std::uint64_t body = kComplexBytes * n * m + record * s;
    if (r.remaining() < body) {
        // Report where the first incomplete record starts.
        const std::uint64_t h_bytes = kComplexBytes * n * m;
        std::uint64_t at = r.offset();
        if (r.remaining() >= h_bytes) {
            at += h_bytes + ((r.remaining() - h_bytes) / record) * record;
        }
        throw FormatError("dataset truncated: expected " + std::to_string(body) +
                              " body bytes, found " + std::to_string(r.remaining()),
                          at);
    }

    CMatrix h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (Eigen::Index row = 0; row < h.rows(); ++row)
        for (Eigen::Index col = 0; col < h.cols(); ++col) h(row, col) = r.c128("BS-RIS channel");

    std::vector<UserLinks> links(s);
    for (std::uint32_t i = 0; i < s; ++i) {
        links[i].direct[0] = get_vector(r, m, "sample record");
        links[i].direct[1] = get_vector(r, m, "sample record");
        links[i].ris_user[0] = get_vector(r, n, "sample record");
        links[i].ris_user[1] = get_vector(r, n, "sample record");
    }
    r.expect_end("dataset");
    return Dataset(std::move(h), std::move(links), seed);
}

void write_dataset(const Dataset& dataset, const std::string& path) {
    io::write_file_atomic(path, encode_dataset(dataset));
}

Dataset read_dataset(const std::string& path) { return decode_dataset(io::read_file(path)); }

} // namespace risnoma
