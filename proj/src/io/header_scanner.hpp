// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include <fmt/core.h>

#include "occlukit/types.hpp"

namespace occlukit::io::detail {

/// Whitespace-separated token reader for PNM/PFM headers. '#' starts a
/// comment that runs to end of line.
class HeaderScanner {
public:
    HeaderScanner(std::string_view bytes, std::string_view name) : bytes_(bytes), name_(name) {}

    std::string_view token(std::string_view what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) throw DataError(fmt::format("{}: missing {}", name_, what));
        return bytes_.substr(start, pos_ - start);
    }

    int integer(std::string_view what) {
        const auto tok = token(what);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw DataError(fmt::format("{}: malformed {} '{}'", name_, what, tok));
        }
        return value;
    }

    double real(std::string_view what) {
        const std::string tok(token(what));
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw DataError(fmt::format("{}: malformed {} '{}'", name_, what, tok));
        }
    }

    /// Consumes the single whitespace byte separating header from payload.
    void single_whitespace() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw DataError(fmt::format("{}: header not terminated by whitespace", name_));
        }
        ++pos_;
    }

    [[nodiscard]] std::size_t position() const { return pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view bytes_;
    std::string_view name_;
    std::size_t pos_ = 0;
};

}  // namespace occlukit::io::detail
