#include "iclprobe/model_gateway.hpp"

#include "iclprobe/digest.hpp"
#include "iclprobe/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace iclprobe {

namespace fs = std::filesystem;
using json = nlohmann::json;

CacheKey CacheKey::of(const ModelSpec& model, std::string_view prompt) {
    // Keys are canonical JSON (sorted object keys) so that field order
    // never changes a digest.
    json doc = {
        {"endpoint_url", model.endpoint_url},
        {"model_name", model.model_name},
        {"max_tokens", model.params.max_tokens},
        {"temperature", model.params.temperature},
        {"stop", model.params.stop},
        {"prompt", std::string(prompt)},
    };
    return CacheKey{sha256_hex(doc.dump())};
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) {
        throw InputError("cannot create cache directory " + dir_.string() + ": " + ec.message());
    }
}

fs::path ResponseCache::path_for(const CacheKey& key) const {
    return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    try {
        auto doc = json::parse(in);
        return doc.at("response").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void ResponseCache::put(const CacheKey& key, std::string_view response,
                        std::string_view description) {
    const auto target = path_for(key);
    fs::create_directories(target.parent_path());

    thread_local std::mt19937_64 salt{std::random_device{}()};
    std::ostringstream tmp_name;
    tmp_name << target.filename().string() << ".tmp." << std::hex << salt();
    const auto tmp = target.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write cache entry " + tmp.string());
        }
        json doc = {{"key", key.digest}, {"response", std::string(response)}};
        if (!description.empty()) doc["description"] = std::string(description);
        out << doc.dump();
        if (!out.flush()) {
            throw Error("cannot write cache entry " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot publish cache entry " + target.string());
    }
}

ResponseCache::Stats ResponseCache::stats() const {
    Stats s;
    if (!fs::exists(dir_)) return s;
    for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            ++s.entries;
            s.bytes += entry.file_size();
        }
    }
    return s;
}

std::size_t ResponseCache::clear() {
    std::size_t removed = 0;
    if (!fs::exists(dir_)) return removed;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    for (const auto& f : files) {
        if (fs::remove(f)) ++removed;
    }
    return removed;
}

}  // namespace iclprobe
