#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "layoutgen/error.hpp"
#include "layoutgen/types.hpp"

namespace layoutgen {

// Tolerances used across validation entry points.
inline constexpr double kPaletteTol = 1e-6;  // accepted drift of a raw palette sum
inline constexpr double kMaskTol = 1e-9;     // column-sum tolerance of a soft mask

/// Accepts a raw vector as a palette if entries are >= 0 and sum to 1 within
/// 1e-6, renormalizing exactly on accept.
Palette validate_palette(const std::vector<double>& v);

/// Re-checks an already constructed palette without renormalizing.
void validate_palette(const Palette& p);

/// Throws unless every pixel column is a probability distribution.
void check_soft_mask(const SoftMask& m);
void check_soft_mask(const AugmentedSoftMask& m);
void check_layout(const HardLayout& layout);

/// Per-class pixel fractions of a hard layout.
Palette hard_histogram(const HardLayout& layout);

/// Spatial average of a soft mask per class; coincides with hard_histogram on
/// one-hot masks.
Palette soft_histogram(const SoftMask& m);

/// Per-pixel argmax over classes; ties break to the lowest class index.
HardLayout argmax_labeling(const SoftMask& m);

// --- label-map I/O (PGM, maxval = classes - 1) -----------------------------

enum class PgmFormat { Ascii, Binary };

HardLayout read_label_map(std::istream& in);
HardLayout read_label_map_file(const std::string& path);
/// Binary (P5) when classes <= 256, ASCII (P2) otherwise.
void write_label_map(std::ostream& out, const HardLayout& layout);
void write_label_map(std::ostream& out, const HardLayout& layout, PgmFormat format);
void write_label_map_file(const std::string& path, const HardLayout& layout);

// --- palette text I/O -------------------------------------------------------

/// Parses one palette from inline text: a JSON array or comma-separated
/// decimals.
Palette parse_palette(const std::string& text);

/// Reads palettes from a stream: either a single JSON array spanning the
/// stream, or one palette per line (JSON array or comma-separated decimals).
std::vector<Palette> read_palettes(std::istream& in);

std::string palette_to_json(const Palette& p);

}  // namespace layoutgen
