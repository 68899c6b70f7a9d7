#pragma once

#include "boardscan/position.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace boardscan {

/// Squares decided so far; nullopt means not yet filled.
using PartialBoard = std::array<std::optional<PieceClass>, kNumSquares>;

struct KingSquares {
    int white = -1;
    int black = -1;
};

/// Candidate squares for one class, best first. The cursor only advances.
class ClassQueue {
public:
    ClassQueue(PieceClass piece, std::vector<std::pair<int, double>> entries);

    PieceClass piece() const noexcept { return piece_; }
    bool exhausted() const noexcept { return cursor_ >= entries_.size(); }
    /// (square, probability) at the cursor. Precondition: !exhausted().
    const std::pair<int, double>& head() const { return entries_[cursor_]; }
    void advance() { ++cursor_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    PieceClass piece_;
    std::vector<std::pair<int, double>> entries_;
    std::size_t cursor_ = 0;
};

/// Head probability of each of the ten queues (nullopt once exhausted).
class TopsVector {
public:
    explicit TopsVector(std::vector<ClassQueue> queues);

    /// Queue holding the highest head; lower ordinal wins ties. Returns
    /// nullptr when every queue is exhausted.
    ClassQueue* best();
    std::array<std::optional<double>, 10> values() const;

private:
    std::vector<ClassQueue> queues_;
};

/// One popped tops entry, in processing order.
struct FillStep {
    PieceClass piece;
    int square;
    double probability;
    bool accepted;
};

KingSquares place_kings(const BoardProbabilities& probs);

/// Marks every unfilled square whose argmax is Empty.
PartialBoard place_empties(const BoardProbabilities& probs, PartialBoard board);

/// Fills the remaining squares in global probability order under the census
/// limits. Squares left when every queue runs dry become empty. When `trace`
/// is given, every popped entry is appended to it.
BoardPosition greedy_fill(const BoardProbabilities& probs, PartialBoard board,
                          const PieceCensusLimits& limits, std::vector<FillStep>* trace = nullptr);

/// Kings, then empties, then greedy fill.
BoardPosition infer_position(const BoardProbabilities& probs, const PieceCensusLimits& limits = {},
                             std::vector<FillStep>* trace = nullptr);

/// Unconstrained per-square argmax (top-1 baseline).
BoardPosition argmax_position(const BoardProbabilities& probs);

} // namespace boardscan
