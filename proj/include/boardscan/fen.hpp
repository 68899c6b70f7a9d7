#pragma once

#include "boardscan/position.hpp"

#include <string>
#include <string_view>

namespace boardscan {

/// Placement field only: eight '/'-separated rank blocks, a8 first.
std::string encode_fen(const BoardPosition& position);

struct FenDecodeOptions {
    /// Reject non-maximal digit runs such as "44".
    bool strict = true;
    /// Also require the decoded position to satisfy the census rules.
    bool enforce_census = false;
};

/// Throws ParseError with the character offset of the first problem.
BoardPosition decode_fen(std::string_view text, const FenDecodeOptions& options = {});

} // namespace boardscan
