#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace boardscan {

/// Square label. The ordinal order is fixed: it is the column order of
/// probability vectors and the argmax tie-break order.
enum class PieceClass : std::uint8_t {
    WhiteKing, WhiteQueen, WhiteRook, WhiteBishop, WhiteKnight, WhitePawn,
    BlackKing, BlackQueen, BlackRook, BlackBishop, BlackKnight, BlackPawn,
    Empty,
};

inline constexpr int kNumClasses = 13;
inline constexpr int kNumSquares = 64;

enum class Color : std::uint8_t { White, Black };

enum class PieceType : std::uint8_t { King, Queen, Rook, Bishop, Knight, Pawn };

constexpr int ordinal(PieceClass c) { return static_cast<int>(c); }
constexpr PieceClass piece_class(int ordinal) { return static_cast<PieceClass>(ordinal); }
constexpr bool is_empty(PieceClass c) { return c == PieceClass::Empty; }
constexpr Color color_of(PieceClass c) { return ordinal(c) < 6 ? Color::White : Color::Black; }
constexpr PieceType type_of(PieceClass c) { return static_cast<PieceType>(ordinal(c) % 6); }
constexpr PieceClass make_piece(Color color, PieceType type) {
    return piece_class((color == Color::White ? 0 : 6) + static_cast<int>(type));
}

/// 'K'..'p' for pieces, '_' for empty.
char to_char(PieceClass c);
std::optional<PieceClass> piece_from_char(char ch);

/// Row-major from the top-left of the rectified board: 0 = a8, 63 = h1.
constexpr int square_row(int square) { return square / 8; }
constexpr int square_col(int square) { return square % 8; }
constexpr bool square_is_light(int square) { return (square_row(square) + square_col(square)) % 2 == 0; }
/// Algebraic name under the white-at-bottom convention, e.g. "e4".
std::string square_name(int square);

using BoardPosition = std::array<PieceClass, kNumSquares>;

BoardPosition empty_position();
BoardPosition starting_position();

/// 13 class probabilities indexed by PieceClass ordinal.
using SquareProbabilities = std::array<double, kNumClasses>;
/// One vector per square, indexed like BoardPosition.
using BoardProbabilities = std::array<SquareProbabilities, kNumSquares>;

/// Largest accepted |sum - 1| before a vector is rescaled rather than rejected.
inline constexpr double kNormalizationTolerance = 1e-3;

/// Checks entries are finite and within [0, 1] and that the sum is within
/// kNormalizationTolerance of 1, then rescales to sum exactly 1. Returns
/// false (leaving `probs` untouched) when the vector is unusable.
bool normalize_probabilities(SquareProbabilities& probs);

/// Highest-probability class; ties go to the lowest ordinal.
PieceClass argmax_class(const SquareProbabilities& probs);

/// Per-color maxima. Queens default to 9 on the assumption that untracked
/// promotions were to a queen.
struct PieceCensusLimits {
    int king = 1;
    int queen = 9;
    int rook = 2;
    int bishop = 2;
    int knight = 2;
    int pawn = 8;
    int total = 16;
    /// Two same-side bishops must stand on opposite square colors.
    bool opposite_bishops = true;

    int limit(PieceType type) const;
};

struct Census {
    std::array<std::array<int, 6>, 2> count{};
    std::array<int, 2> total{};

    int of(PieceClass c) const { return count[static_cast<int>(color_of(c))][static_cast<int>(type_of(c))]; }
};

Census census(const BoardPosition& position);

/// Human-readable list of every rule the position breaks: king count other
/// than one per side, census overflow, per-side total, bishop square colors.
std::vector<std::string> constraint_violations(const BoardPosition& position,
                                               const PieceCensusLimits& limits = {});

} // namespace boardscan
