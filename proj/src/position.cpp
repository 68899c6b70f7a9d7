#include "boardscan/position.hpp"

#include "boardscan/error.hpp"

#include <algorithm>
#include <cmath>

namespace boardscan {

namespace {
constexpr char kLetters[kNumClasses + 1] = "KQRBNPkqrbnp_";
}

char to_char(PieceClass c) {
    return kLetters[ordinal(c)];
}

std::optional<PieceClass> piece_from_char(char ch) {
    for (int i = 0; i < kNumClasses; ++i) {
        if (kLetters[i] == ch) {
            return piece_class(i);
        }
    }
    return std::nullopt;
}

std::string square_name(int square) {
    return {static_cast<char>('a' + square_col(square)), static_cast<char>('8' - square_row(square))};
}

BoardPosition empty_position() {
    BoardPosition p;
    p.fill(PieceClass::Empty);
    return p;
}

BoardPosition starting_position() {
    using enum PieceClass;
    BoardPosition p = empty_position();
    const PieceClass back[8] = {BlackRook, BlackKnight, BlackBishop, BlackQueen,
                                BlackKing, BlackBishop, BlackKnight, BlackRook};
    for (int c = 0; c < 8; ++c) {
        p[c] = back[c];
        p[8 + c] = BlackPawn;
        p[48 + c] = WhitePawn;
        p[56 + c] = make_piece(Color::White, type_of(back[c]));
    }
    return p;
}

bool normalize_probabilities(SquareProbabilities& probs) {
    double sum = 0.0;
    for (double v : probs) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kNormalizationTolerance) {
            return false;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance) {
        return false;
    }
    if (std::abs(sum - 1.0) <= 1e-12) {
        return true;
    }
    for (double& v : probs) {
        v = std::min(1.0, v / sum);
    }
    return true;
}

PieceClass argmax_class(const SquareProbabilities& probs) {
    int best = 0;
    for (int i = 1; i < kNumClasses; ++i) {
        if (probs[i] > probs[best]) {
            best = i;
        }
    }
    return piece_class(best);
}

int PieceCensusLimits::limit(PieceType type) const {
    switch (type) {
    case PieceType::King: return king;
    case PieceType::Queen: return queen;
    case PieceType::Rook: return rook;
    case PieceType::Bishop: return bishop;
    case PieceType::Knight: return knight;
    case PieceType::Pawn: return pawn;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown piece type");
}

Census census(const BoardPosition& position) {
    Census c;
    for (PieceClass p : position) {
        if (is_empty(p)) {
            continue;
        }
        const int side = static_cast<int>(color_of(p));
        ++c.count[side][static_cast<int>(type_of(p))];
        ++c.total[side];
    }
    return c;
}

std::vector<std::string> constraint_violations(const BoardPosition& position, const PieceCensusLimits& limits) {
    std::vector<std::string> out;
    const Census c = census(position);
    for (Color side : {Color::White, Color::Black}) {
        const int s = static_cast<int>(side);
        const char* name = side == Color::White ? "white" : "black";
        if (c.count[s][static_cast<int>(PieceType::King)] != 1) {
            out.push_back(std::string(name) + " has " + std::to_string(c.count[s][0]) + " kings");
        }
        for (int t = 1; t < 6; ++t) {
            const auto type = static_cast<PieceType>(t);
            if (c.count[s][t] > limits.limit(type)) {
                out.push_back(std::string(name) + " has too many " + to_char(make_piece(Color::White, type)));
            }
        }
        if (c.total[s] > limits.total) {
            out.push_back(std::string(name) + " has " + std::to_string(c.total[s]) + " pieces");
        }
        if (limits.opposite_bishops) {
            int light = 0;
            int dark = 0;
            const PieceClass bishop = make_piece(side, PieceType::Bishop);
            for (int sq = 0; sq < kNumSquares; ++sq) {
                if (position[sq] == bishop) {
                    (square_is_light(sq) ? light : dark)++;
                }
            }
            if (light > 1 || dark > 1) {
                out.push_back(std::string(name) + " bishops share a square color");
            }
        }
    }
    return out;
}

} // namespace boardscan
