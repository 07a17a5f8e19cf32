#pragma once

#include "qdraw/autograd/tensor.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qdraw::autograd {

/// Versioned text container of named tensors plus free-form metadata.
///
/// Layout (line oriented):
///   qdckpt 1
///   meta <key> <value...>            zero or more
///   text <name> <n_lines>            zero or more, followed by n_lines raw lines
///   tensor <name> <rank> <dims...>   zero or more, followed by one line of
///                                    hexfloat values (bit-exact round trip)
///   end
struct Checkpoint {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::pair<std::string, std::string>> texts; // name -> raw block
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor &tensor(const std::string &name) const {
        for (const auto &[n, t] : tensors)
            if (n == name)
                return t;
        throw std::out_of_range("Checkpoint: no tensor named '" + name + "'");
    }

    std::string meta_value(const std::string &key) const {
        for (const auto &[k, v] : meta)
            if (k == key)
                return v;
        throw std::out_of_range("Checkpoint: no meta key '" + key + "'");
    }
};

namespace detail {

inline std::string format_hex(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

} // namespace detail

inline void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << "qdckpt 1\n";
    for (const auto &[k, v] : ckpt.meta)
        out << "meta " << k << " " << v << "\n";
    for (const auto &[name, block] : ckpt.texts) {
        std::size_t lines = 0;
        for (char c : block)
            lines += c == '\n' ? 1 : 0;
        out << "text " << name << " " << lines << "\n" << block;
    }
    for (const auto &[name, t] : ckpt.tensors) {
        out << "tensor " << name << " " << t.shape.rank;
        for (int i = 0; i < t.shape.rank; ++i)
            out << " " << t.shape.dims[static_cast<std::size_t>(i)];
        out << "\n";
        for (std::size_t i = 0; i < t.numel(); ++i)
            out << (i ? " " : "") << detail::format_hex(t.v[i]);
        out << "\n";
    }
    out << "end\n";
    if (!out)
        throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "qdckpt 1")
        throw std::runtime_error("load_checkpoint: bad header in " + path);
    Checkpoint ckpt;
    while (std::getline(in, line)) {
        if (line == "end")
            return ckpt;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ')
                value.erase(0, 1);
            ckpt.meta.emplace_back(key, value);
        } else if (tag == "text") {
            std::string name;
            std::size_t n_lines = 0;
            ls >> name >> n_lines;
            std::string block;
            for (std::size_t i = 0; i < n_lines; ++i) {
                std::string raw;
                if (!std::getline(in, raw))
                    throw std::runtime_error("load_checkpoint: truncated text block " + name);
                block += raw;
                block += '\n';
            }
            ckpt.texts.emplace_back(name, block);
        } else if (tag == "tensor") {
            std::string name;
            int rank = 0;
            ls >> name >> rank;
            if (rank < 0 || rank > 3)
                throw std::runtime_error("load_checkpoint: bad rank for tensor " + name);
            Shape shape;
            shape.rank = rank;
            for (int i = 0; i < rank; ++i)
                ls >> shape.dims[static_cast<std::size_t>(i)];
            std::string values;
            if (!std::getline(in, values))
                throw std::runtime_error("load_checkpoint: missing values for tensor " + name);
            Tensor t(shape);
            const char *cursor = values.c_str();
            for (std::size_t i = 0; i < t.numel(); ++i) {
                char *next = nullptr;
                t.v[i] = std::strtod(cursor, &next);
                if (next == cursor)
                    throw std::runtime_error("load_checkpoint: short value row in tensor " + name);
                cursor = next;
            }
            ckpt.tensors.emplace_back(name, std::move(t));
        } else {
            throw std::runtime_error("load_checkpoint: unknown tag '" + tag + "' in " + path);
        }
    }
    throw std::runtime_error("load_checkpoint: missing end marker in " + path);
}

} // namespace qdraw::autograd
