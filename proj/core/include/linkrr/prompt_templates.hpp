#pragma once

#include <string_view>

// Pinned prompt rendering. These strings are load-bearing: tests assert the
// exact bytes, and the shared-prefix CostReport math assumes every candidate
// suffix follows an identical prefix. Whitespace rules:
//   * blocks are joined by exactly one blank line ("\n\n");
//   * the shared prefix always ends with "\n\n", so prefix + suffix
//     concatenation is byte-exact without further glue;
//   * example answers carry a single leading space (" Yes" / " No") and the
//     candidate block ends at "Answer:" with no trailing space;
//   * the neighbor-prediction question keeps a space before its "\n\n"
//     (after the question mark), then ends at "Answer:";
//   * node text is whitespace-collapsed first; empty text renders as the
//     "(no text)" sentinel.
// {text} is the only substitution. <NODE> and <PAIRWISE> stay literal in the
// rendered string; their byte offsets are reported for providers that inject
// embeddings at those positions.

namespace linkrr::prompts {

inline constexpr std::string_view kSourceBlock = "This is the source node. <NODE> Text: {text}.";

inline constexpr std::string_view kCandidateBlock =
    "This is another node. <NODE> <PAIRWISE> Text: {text}. "
    "Is this node connected with the source node? Answer:";

inline constexpr std::string_view kBlockSeparator = "\n\n";
inline constexpr std::string_view kYesAnswer = " Yes";
inline constexpr std::string_view kNoAnswer = " No";

inline constexpr std::string_view kNeighborQuestion = "What nodes are connected with it? \n\nAnswer:";

inline constexpr std::string_view kNodeMarker = "<NODE>";
inline constexpr std::string_view kPairwiseMarker = "<PAIRWISE>";
inline constexpr std::string_view kTextPlaceholder = "{text}";
inline constexpr std::string_view kEmptyTextSentinel = "(no text)";

}  // namespace linkrr::prompts
