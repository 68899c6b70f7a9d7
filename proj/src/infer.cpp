#include "boardscan/infer.hpp"

#include <algorithm>

namespace boardscan {

namespace {

// Non-king, non-empty classes in ordinal order.
constexpr PieceClass kFillClasses[10] = {
    PieceClass::WhiteQueen, PieceClass::WhiteRook, PieceClass::WhiteBishop, PieceClass::WhiteKnight,
    PieceClass::WhitePawn,  PieceClass::BlackQueen, PieceClass::BlackRook, PieceClass::BlackBishop,
    PieceClass::BlackKnight, PieceClass::BlackPawn,
};

// Best and second-best squares for one class; lowest index wins ties.
std::pair<int, int> top_two(const BoardProbabilities& probs, PieceClass piece) {
    const int c = ordinal(piece);
    int best = 0;
    for (int sq = 1; sq < kNumSquares; ++sq) {
        if (probs[sq][c] > probs[best][c]) {
            best = sq;
        }
    }
    int second = best == 0 ? 1 : 0;
    for (int sq = 0; sq < kNumSquares; ++sq) {
        if (sq != best && probs[sq][c] > probs[second][c]) {
            second = sq;
        }
    }
    return {best, second};
}

} // namespace

ClassQueue::ClassQueue(PieceClass piece, std::vector<std::pair<int, double>> entries)
    : piece_(piece), entries_(std::move(entries)) {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
}

TopsVector::TopsVector(std::vector<ClassQueue> queues) : queues_(std::move(queues)) {}

ClassQueue* TopsVector::best() {
    ClassQueue* best = nullptr;
    for (auto& q : queues_) {
        if (q.exhausted()) {
            continue;
        }
        if (best == nullptr || q.head().second > best->head().second
            || (q.head().second == best->head().second && ordinal(q.piece()) < ordinal(best->piece()))) {
            best = &q;
        }
    }
    return best;
}

std::array<std::optional<double>, 10> TopsVector::values() const {
    std::array<std::optional<double>, 10> out{};
    for (std::size_t i = 0; i < queues_.size() && i < out.size(); ++i) {
        if (!queues_[i].exhausted()) {
            out[i] = queues_[i].head().second;
        }
    }
    return out;
}

KingSquares place_kings(const BoardProbabilities& probs) {
    auto [w1, w2] = top_two(probs, PieceClass::WhiteKing);
    auto [b1, b2] = top_two(probs, PieceClass::BlackKing);
    if (w1 != b1) {
        return {w1, b1};
    }
    const double white_loss = probs[w1][ordinal(PieceClass::WhiteKing)] - probs[w2][ordinal(PieceClass::WhiteKing)];
    const double black_loss = probs[b1][ordinal(PieceClass::BlackKing)] - probs[b2][ordinal(PieceClass::BlackKing)];
    if (white_loss < black_loss) {
        return {w2, b1};
    }
    return {w1, b2};
}

PartialBoard place_empties(const BoardProbabilities& probs, PartialBoard board) {
    for (int sq = 0; sq < kNumSquares; ++sq) {
        if (!board[sq] && argmax_class(probs[sq]) == PieceClass::Empty) {
            board[sq] = PieceClass::Empty;
        }
    }
    return board;
}

BoardPosition greedy_fill(const BoardProbabilities& probs, PartialBoard board, const PieceCensusLimits& limits,
                          std::vector<FillStep>* trace) {
    std::vector<int> open;
    for (int sq = 0; sq < kNumSquares; ++sq) {
        if (!board[sq]) {
            open.push_back(sq);
        }
    }

    std::vector<ClassQueue> queues;
    queues.reserve(10);
    for (PieceClass piece : kFillClasses) {
        std::vector<std::pair<int, double>> entries;
        entries.reserve(open.size());
        for (int sq : open) {
            entries.emplace_back(sq, probs[sq][ordinal(piece)]);
        }
        queues.emplace_back(piece, std::move(entries));
    }
    TopsVector tops(std::move(queues));

    std::array<std::array<int, 6>, 2> used{};
    std::array<int, 2> total{};
    // Bishops already placed, per side and square color (0 light, 1 dark).
    std::array<std::array<int, 2>, 2> bishops_on{};
    for (int sq = 0; sq < kNumSquares; ++sq) {
        if (board[sq] && !is_empty(*board[sq])) {
            const PieceClass p = *board[sq];
            const int side = static_cast<int>(color_of(p));
            ++used[side][static_cast<int>(type_of(p))];
            ++total[side];
            if (type_of(p) == PieceType::Bishop) {
                ++bishops_on[side][square_is_light(sq) ? 0 : 1];
            }
        }
    }

    std::size_t to_fill = open.size();
    while (to_fill > 0) {
        ClassQueue* queue = tops.best();
        if (queue == nullptr) {
            break;
        }
        const auto [sq, prob] = queue->head();
        const PieceClass piece = queue->piece();
        const int side = static_cast<int>(color_of(piece));
        const int type = static_cast<int>(type_of(piece));
        const int shade = square_is_light(sq) ? 0 : 1;

        bool accept = !board[sq] && used[side][type] < limits.limit(type_of(piece)) && total[side] < limits.total;
        if (accept && limits.opposite_bishops && type_of(piece) == PieceType::Bishop && bishops_on[side][shade] > 0) {
            accept = false;
        }
        if (accept) {
            board[sq] = piece;
            ++used[side][type];
            ++total[side];
            if (type_of(piece) == PieceType::Bishop) {
                ++bishops_on[side][shade];
            }
            --to_fill;
        }
        if (trace != nullptr) {
            trace->push_back({piece, sq, prob, accept});
        }
        queue->advance();
    }

    BoardPosition out;
    for (int sq = 0; sq < kNumSquares; ++sq) {
        out[sq] = board[sq].value_or(PieceClass::Empty);
    }
    return out;
}

BoardPosition infer_position(const BoardProbabilities& probs, const PieceCensusLimits& limits,
                             std::vector<FillStep>* trace) {
    PartialBoard board{};
    const KingSquares kings = place_kings(probs);
    board[kings.white] = PieceClass::WhiteKing;
    board[kings.black] = PieceClass::BlackKing;
    board = place_empties(probs, board);
    return greedy_fill(probs, board, limits, trace);
}

BoardPosition argmax_position(const BoardProbabilities& probs) {
    BoardPosition out;
    for (int sq = 0; sq < kNumSquares; ++sq) {
        out[sq] = argmax_class(probs[sq]);
    }
    return out;
}

} // namespace boardscan
