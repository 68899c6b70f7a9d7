#include "boardscan/fen.hpp"

#include "boardscan/error.hpp"

namespace boardscan {

std::string encode_fen(const BoardPosition& position) {
    std::string out;
    out.reserve(71);
    for (int row = 0; row < 8; ++row) {
        if (row > 0) {
            out.push_back('/');
        }
        int run = 0;
        for (int col = 0; col < 8; ++col) {
            const PieceClass p = position[row * 8 + col];
            if (is_empty(p)) {
                ++run;
                continue;
            }
            if (run > 0) {
                out.push_back(static_cast<char>('0' + run));
                run = 0;
            }
            out.push_back(to_char(p));
        }
        if (run > 0) {
            out.push_back(static_cast<char>('0' + run));
        }
    }
    return out;
}

BoardPosition decode_fen(std::string_view text, const FenDecodeOptions& options) {
    BoardPosition pos = empty_position();
    int row = 0;
    int col = 0;
    bool prev_digit = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (ch == '/') {
            if (col != 8) {
                throw ParseError(i, "rank " + std::to_string(row + 1) + " has " + std::to_string(col) + " squares");
            }
            if (++row > 7) {
                throw ParseError(i, "more than 8 rank blocks");
            }
            col = 0;
            prev_digit = false;
            continue;
        }
        if (ch >= '1' && ch <= '9') {
            if (prev_digit && options.strict) {
                throw ParseError(i, "adjacent digits");
            }
            col += ch - '0';
            if (col > 8) {
                throw ParseError(i, "rank overflow");
            }
            prev_digit = true;
            continue;
        }
        const auto piece = piece_from_char(ch);
        if (!piece || is_empty(*piece)) {
            throw ParseError(i, std::string("bad character '") + ch + "'");
        }
        if (col >= 8) {
            throw ParseError(i, "rank overflow");
        }
        pos[row * 8 + col] = *piece;
        ++col;
        prev_digit = false;
    }
    if (row != 7) {
        throw ParseError(text.size(), "expected 8 rank blocks, found " + std::to_string(row + 1));
    }
    if (col != 8) {
        throw ParseError(text.size(), "last rank has " + std::to_string(col) + " squares");
    }
    if (options.enforce_census) {
        if (const auto v = constraint_violations(pos); !v.empty()) {
            throw ParseError(0, "illegal piece census: " + v.front());
        }
    }
    return pos;
}

} // namespace boardscan
