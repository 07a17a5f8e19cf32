#pragma once

#include "qdraw/sketch/drawing.hpp"

#include <httplib.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace qdraw::sketch {

/// Categories this lab supports (the three visually-similar classes).
inline const std::array<std::string, 3> kCategories = {"calculator", "camera", "cellphone"};

inline bool is_supported_category(const std::string &category) {
    for (const std::string &c : kCategories)
        if (c == category)
            return true;
    return false;
}

/// Public bucket of simplified-drawing category files.
inline constexpr const char *kDefaultBaseUrl =
    "https://storage.googleapis.com/quickdraw_dataset/full/simplified";

namespace detail {

struct UrlParts {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path prefix, no trailing slash
};

inline UrlParts split_url(const std::string &url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw std::invalid_argument("fetch_category: base URL must include a scheme: " + url);
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, ""};
    UrlParts parts{url.substr(0, path_start), url.substr(path_start)};
    while (!parts.prefix.empty() && parts.prefix.back() == '/')
        parts.prefix.pop_back();
    return parts;
}

inline void verify_first_line(const std::filesystem::path &file) {
    std::ifstream in(file);
    std::string first;
    if (!in || !std::getline(in, first) || first.empty())
        throw std::runtime_error("fetch_category: empty payload in " + file.string());
    parse_drawing(first); // throws on unparseable payload
}

} // namespace detail

/// Downloads the newline-delimited JSON file for a category into the cache and
/// returns its path. A warm cache short-circuits the network entirely. The
/// base URL override exists for mirrors and hermetic tests.
inline std::filesystem::path fetch_category(const std::string &category,
                                            const std::filesystem::path &cache_dir,
                                            const std::string &base_url = kDefaultBaseUrl) {
    if (!is_supported_category(category))
        throw std::invalid_argument("fetch_category: unknown category '" + category +
                                    "' (supported: calculator, camera, cellphone)");
    std::filesystem::create_directories(cache_dir);
    const std::filesystem::path cached = cache_dir / (category + ".ndjson");
    if (std::filesystem::exists(cached) && std::filesystem::file_size(cached) > 0) {
        detail::verify_first_line(cached);
        return cached;
    }

    const detail::UrlParts url = detail::split_url(base_url);
    httplib::Client client(url.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    const std::string target = url.prefix + "/" + category + ".ndjson";
    httplib::Result res = client.Get(target);
    if (!res)
        throw std::runtime_error("fetch_category: network failure for " + url.origin + target +
                                 ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw std::runtime_error("fetch_category: HTTP " + std::to_string(res->status) + " for " +
                                 url.origin + target);

    const std::filesystem::path tmp = cached.string() + ".part";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw std::runtime_error("fetch_category: cannot write " + tmp.string());
        out << res->body;
    }
    try {
        detail::verify_first_line(tmp);
    } catch (...) {
        std::filesystem::remove(tmp);
        throw;
    }
    std::filesystem::rename(tmp, cached);
    return cached;
}

} // namespace qdraw::sketch
