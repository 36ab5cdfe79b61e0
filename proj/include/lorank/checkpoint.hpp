#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lorank/lora.hpp"
#include "lorank/squeeze.hpp"

namespace lorank {

struct ProvenanceEntry {
    std::string method;
    std::size_t source_rank = 0;
    std::size_t target_rank = 0;
    std::uint64_t base_seed = 0;
};

/// Named collection of factor pairs plus manifest metadata. Unless the
/// heterogeneous flag is set, every tensor must share one rank.
struct AdapterCheckpoint {
    int format_version = 1;
    std::optional<std::string> base_model;
    double alpha = 0.0;
    bool heterogeneous = false;
    std::vector<LoraFactorPair> tensors;
    std::vector<ProvenanceEntry> provenance;

    std::size_t rank() const { return tensors.empty() ? 0 : tensors.front().rank; }
};

/// Per-tensor squeeze seed; independent of tensor order so parallel runs are
/// reproducible.
inline std::uint64_t tensor_seed(std::uint64_t base_seed, std::string_view name) {
    return base_seed ^ fnv1a64(name);
}

/// Builds a checkpoint over homogeneous tensors; alpha defaults to the rank.
inline AdapterCheckpoint make_checkpoint(std::vector<LoraFactorPair> tensors,
                                         std::optional<double> alpha = std::nullopt,
                                         std::optional<std::string> base_model = std::nullopt) {
    AdapterCheckpoint ckpt;
    ckpt.tensors = std::move(tensors);
    ckpt.base_model = std::move(base_model);
    ckpt.alpha = alpha ? *alpha : static_cast<double>(ckpt.rank());
    return ckpt;
}

inline void validate_checkpoint(const AdapterCheckpoint& ckpt) {
    if (ckpt.format_version != 1) {
        throw ValidationError("checkpoint: unsupported format_version " +
                              std::to_string(ckpt.format_version));
    }
    std::unordered_set<std::string> names;
    for (const auto& t : ckpt.tensors) {
        if (t.name.empty()) throw ValidationError("checkpoint: tensor with empty name");
        if (!names.insert(t.name).second) {
            throw ValidationError("checkpoint: duplicate tensor name '" + t.name + "'");
        }
        if (!ckpt.heterogeneous && t.rank != ckpt.rank()) {
            throw ValidationError("checkpoint: tensor '" + t.name + "' has rank " +
                                  std::to_string(t.rank) + " but the checkpoint rank is " +
                                  std::to_string(ckpt.rank()) +
                                  " (heterogeneous flag not set)");
        }
    }
}

namespace detail {

inline std::string hash_hex(std::string_view name) {
    static const char* digits = "0123456789abcdef";
    const std::uint64_t h = fnv1a64(name);
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h >> (4 * i)) & 0xf];
    return out;
}

/// Serializes a matrix as IEEE-754 binary32, little-endian, row-major.
inline std::string matrix_to_f32le(const Matrix& m) {
    std::string out;
    out.reserve(m.size() * 4);
    for (double v : m.data()) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        out.push_back(static_cast<char>(bits & 0xff));
        out.push_back(static_cast<char>((bits >> 8) & 0xff));
        out.push_back(static_cast<char>((bits >> 16) & 0xff));
        out.push_back(static_cast<char>((bits >> 24) & 0xff));
    }
    return out;
}

inline Matrix matrix_from_f32le(std::size_t rows, std::size_t cols, const std::string& bytes,
                                const std::string& context) {
    if (bytes.size() != rows * cols * 4) {
        throw ValidationError("checkpoint: size mismatch for " + context + ": expected " +
                              std::to_string(rows * cols * 4) + " bytes, found " +
                              std::to_string(bytes.size()));
    }
    std::vector<double> data(rows * cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t bits = static_cast<std::uint8_t>(bytes[4 * i]) |
                             (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + 1])) << 8) |
                             (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + 2])) << 16) |
                             (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + 3])) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        data[i] = static_cast<double>(f);
    }
    try {
        return Matrix(rows, cols, std::move(data));
    } catch (const ValidationError& e) {
        throw ValidationError("checkpoint: " + context + ": " + e.what());
    }
}

inline std::string read_file_bytes(const std::filesystem::path& p, const std::string& context) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("checkpoint: missing " + context + " at " + p.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw IoError("checkpoint: failed reading " + p.string());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open " + p.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out.good()) throw IoError("checkpoint: failed writing " + p.string());
}

} // namespace detail

inline nlohmann::ordered_json checkpoint_manifest(const AdapterCheckpoint& ckpt) {
    nlohmann::ordered_json j;
    j["format_version"] = ckpt.format_version;
    j["alpha"] = ckpt.alpha;
    if (ckpt.base_model) j["base_model"] = *ckpt.base_model;
    j["heterogeneous"] = ckpt.heterogeneous;
    j["tensors"] = nlohmann::ordered_json::array();
    for (const auto& t : ckpt.tensors) {
        j["tensors"].push_back({{"name", t.name},
                                {"hash", detail::hash_hex(t.name)},
                                {"rows", t.a.rows()},
                                {"cols", t.b.cols()},
                                {"rank", t.rank}});
    }
    j["provenance"] = nlohmann::ordered_json::array();
    for (const auto& p : ckpt.provenance) {
        j["provenance"].push_back({{"method", p.method},
                                   {"source_rank", p.source_rank},
                                   {"target_rank", p.target_rank},
                                   {"base_seed", p.base_seed}});
    }
    return j;
}

/// Atomic directory write: manifest.json plus blobs/<hash>.a and
/// blobs/<hash>.b per tensor (binary32, little-endian, row-major). Identical
/// checkpoints produce byte-identical directories.
inline void write_checkpoint(const AdapterCheckpoint& ckpt, const std::filesystem::path& dir) {
    validate_checkpoint(ckpt);
    namespace fs = std::filesystem;

    static std::atomic<unsigned> counter{0};
    const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
    const fs::path tmp = parent / (".tmp-" + dir.filename().string() + "-" +
                                   std::to_string(::getpid()) + "-" +
                                   std::to_string(counter.fetch_add(1)));
    std::error_code ec;
    fs::remove_all(tmp, ec);
    try {
        fs::create_directories(tmp / "blobs");
        detail::write_file_bytes(tmp / "manifest.json", checkpoint_manifest(ckpt).dump(2) + "\n");
        for (const auto& t : ckpt.tensors) {
            const std::string hash = detail::hash_hex(t.name);
            detail::write_file_bytes(tmp / "blobs" / (hash + ".a"), detail::matrix_to_f32le(t.a));
            detail::write_file_bytes(tmp / "blobs" / (hash + ".b"), detail::matrix_to_f32le(t.b));
        }
        fs::remove_all(dir, ec);
        fs::rename(tmp, dir);
    } catch (const std::filesystem::filesystem_error& e) {
        fs::remove_all(tmp, ec);
        throw IoError(std::string("checkpoint: ") + e.what());
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }
}

inline AdapterCheckpoint read_checkpoint(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw IoError("checkpoint: no manifest at " + manifest_path.string());
    }

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file_bytes(manifest_path, "manifest"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("checkpoint: malformed manifest: ") + e.what());
    }

    AdapterCheckpoint ckpt;
    try {
        ckpt.format_version = j.at("format_version").get<int>();
        if (ckpt.format_version != 1) {
            throw ValidationError("checkpoint: unsupported format_version " +
                                  std::to_string(ckpt.format_version));
        }
        ckpt.alpha = j.at("alpha").get<double>();
        if (j.contains("base_model")) ckpt.base_model = j.at("base_model").get<std::string>();
        ckpt.heterogeneous = j.value("heterogeneous", false);
        for (const auto& jt : j.at("tensors")) {
            const auto name = jt.at("name").get<std::string>();
            const auto hash = jt.at("hash").get<std::string>();
            const auto rows = jt.at("rows").get<std::size_t>();
            const auto cols = jt.at("cols").get<std::size_t>();
            const auto rank = jt.at("rank").get<std::size_t>();
            if (hash != detail::hash_hex(name)) {
                throw ValidationError("checkpoint: hash mismatch for tensor '" + name + "'");
            }
            Matrix a = detail::matrix_from_f32le(
                rows, rank, detail::read_file_bytes(dir / "blobs" / (hash + ".a"), "blob for tensor '" + name + "'"),
                "tensor '" + name + "' blob a");
            Matrix b = detail::matrix_from_f32le(
                rank, cols, detail::read_file_bytes(dir / "blobs" / (hash + ".b"), "blob for tensor '" + name + "'"),
                "tensor '" + name + "' blob b");
            ckpt.tensors.emplace_back(name, std::move(a), std::move(b));
        }
        for (const auto& jp : j.value("provenance", nlohmann::json::array())) {
            ckpt.provenance.push_back({jp.at("method").get<std::string>(),
                                       jp.at("source_rank").get<std::size_t>(),
                                       jp.at("target_rank").get<std::size_t>(),
                                       jp.at("base_seed").get<std::uint64_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("checkpoint: malformed manifest: ") + e.what());
    }
    validate_checkpoint(ckpt);
    return ckpt;
}

/// Squeezes every tensor to target_rank with a per-tensor derived seed. Any
/// tensor failure aborts the whole operation. Tensors may be processed by up
/// to `threads` workers (0 = hardware concurrency); results are merged in
/// manifest order and independent of the thread count.
inline std::pair<AdapterCheckpoint, std::vector<SqueezeReport>> squeeze_checkpoint(
    const AdapterCheckpoint& ckpt, std::size_t target_rank, const SqueezeMethod& method,
    std::uint64_t base_seed, unsigned threads = 0) {
    validate_checkpoint(ckpt);

    const std::size_t count = ckpt.tensors.size();
    std::vector<LoraFactorPair> out_tensors(count);
    std::vector<SqueezeReport> reports(count);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                SqueezeMethod per_tensor = method;
                const std::uint64_t seed = tensor_seed(base_seed, ckpt.tensors[i].name);
                if (auto* r = std::get_if<RsvdMethod>(&per_tensor)) r->config.seed = seed;
                if (auto* e = std::get_if<EfficientMethod>(&per_tensor)) e->config.seed = seed;
                auto [pair, report] = squeeze_pair(ckpt.tensors[i], target_rank, per_tensor);
                out_tensors[i] = std::move(pair);
                reports[i] = std::move(report);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(count); // stop remaining work
                return;
            }
        }
    };

    if (threads <= 1 || count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    AdapterCheckpoint out;
    out.format_version = ckpt.format_version;
    out.base_model = ckpt.base_model;
    out.alpha = ckpt.alpha;
    out.heterogeneous = false;
    out.tensors = std::move(out_tensors);
    out.provenance = ckpt.provenance;
    out.provenance.push_back({method_name(method), ckpt.rank(), target_rank, base_seed});
    return {std::move(out), std::move(reports)};
}

} // namespace lorank
