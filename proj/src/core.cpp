#include "layoutgen/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "layoutgen/parallel.hpp"

namespace layoutgen {

const char* to_string(Err e) {
  switch (e) {
    case Err::NegativeEntry: return "NegativeEntry";
    case Err::NotNormalized: return "NotNormalized";
    case Err::TooFewClasses: return "TooFewClasses";
    case Err::NonFinite: return "NonFinite";
    case Err::MalformedHeader: return "MalformedHeader";
    case Err::LabelOutOfRange: return "LabelOutOfRange";
    case Err::TruncatedPayload: return "TruncatedPayload";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::AllZeroColumn: return "AllZeroColumn";
    case Err::ZeroRow: return "ZeroRow";
    case Err::ZeroColumn: return "ZeroColumn";
    case Err::EmptyEditSet: return "EmptyEditSet";
    case Err::EmptyPyramid: return "EmptyPyramid";
    case Err::TooFewSamples: return "TooFewSamples";
    case Err::DegenerateComponent: return "DegenerateComponent";
    case Err::DegenerateSample: return "DegenerateSample";
    case Err::AllZeroAfterClip: return "AllZeroAfterClip";
    case Err::EmptyPopulation: return "EmptyPopulation";
    case Err::MixedClassCounts: return "MixedClassCounts";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::RegionOutOfBounds: return "RegionOutOfBounds";
    case Err::BadBackgroundBudget: return "BadBackgroundBudget";
    case Err::AlphaOutOfRange: return "AlphaOutOfRange";
    case Err::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

Palette validate_palette(const std::vector<double>& v) {
  if (v.size() < 2) {
    throw ValidationError(Err::TooFewClasses, "palette needs at least 2 classes, got " +
                                                  std::to_string(v.size()));
  }
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError(Err::NonFinite, "palette entry not finite");
    if (x < 0.0) {
      throw ValidationError(Err::NegativeEntry,
                            "palette entry " + std::to_string(x) + " is negative");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kPaletteTol) {
    throw ValidationError(Err::NotNormalized,
                          "palette sums to " + std::to_string(sum) + ", expected 1");
  }
  Palette p{v};
  for (double& x : p.proportions) x /= sum;
  return p;
}

void validate_palette(const Palette& p) {
  if (p.proportions.size() < 2)
    throw ValidationError(Err::TooFewClasses, "palette needs at least 2 classes, got " +
                                                  std::to_string(p.proportions.size()));
  double sum = 0.0;
  for (double x : p.proportions) {
    if (!std::isfinite(x)) throw ValidationError(Err::NonFinite, "palette entry not finite");
    if (x < 0.0) {
      throw ValidationError(Err::NegativeEntry,
                            "palette entry " + std::to_string(x) + " is negative");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kPaletteTol) {
    throw ValidationError(Err::NotNormalized,
                          "palette sums to " + std::to_string(sum) + ", expected 1");
  }
}

namespace {

void check_columns(const Tensor3& t) {
  const int ch = t.classes;
  const int h = t.height;
  const int w = t.width;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double sum = 0.0;
      for (int c = 0; c < ch; ++c) {
        const double x = t(c, i, j);
        if (!std::isfinite(x)) throw ValidationError(Err::NonFinite, "mask entry not finite");
        if (x < 0.0) throw ValidationError(Err::NegativeEntry, "mask entry negative");
        sum += x;
      }
      // An all-zero column can come out of lenient normalization.
      if (sum > kMaskTol && std::abs(sum - 1.0) > kMaskTol) {
        throw ValidationError(Err::NotNormalized, "mask column does not sum to 1");
      }
    }
  }
}

}  // namespace

void check_soft_mask(const SoftMask& m) {
  if (m.tensor.classes < 1 || m.tensor.height < 1 || m.tensor.width < 1) {
    throw ValidationError(Err::ShapeMismatch, "empty soft mask");
  }
  check_columns(m.tensor);
}

void check_soft_mask(const AugmentedSoftMask& m) {
  if (m.background_index != m.tensor.classes - 1) {
    throw ValidationError(Err::ShapeMismatch, "background must be the last channel");
  }
  check_columns(m.tensor);
}

void check_layout(const HardLayout& layout) {
  if (layout.height < 1 || layout.width < 1 || layout.classes < 2) {
    throw ValidationError(Err::TooFewClasses, "layout needs >= 2 classes and a nonempty grid");
  }
  if (layout.labels.size() != layout.pixels()) {
    throw ValidationError(Err::ShapeMismatch, "label buffer does not match grid");
  }
  for (int v : layout.labels) {
    if (v < 0 || v >= layout.classes) {
      throw ValidationError(Err::LabelOutOfRange,
                            "label " + std::to_string(v) + " outside [0, C)");
    }
  }
}

Palette hard_histogram(const HardLayout& layout) {
  check_layout(layout);
  std::vector<double> counts(layout.classes, 0.0);
  for (int v : layout.labels) counts[v] += 1.0;
  const double inv = 1.0 / static_cast<double>(layout.pixels());
  for (double& c : counts) c *= inv;
  return Palette{counts};
}

Palette soft_histogram(const SoftMask& m) {
  check_soft_mask(m);
  const int ch = m.tensor.classes;
  const auto n = static_cast<std::ptrdiff_t>(m.tensor.pixels());
  std::vector<double> hist(ch, 0.0);
  const double inv = 1.0 / static_cast<double>(n);
  for (int c = 0; c < ch; ++c) {
    const double* slice = m.tensor.channel(c);
    hist[c] = par::block_sum(n, [slice](std::ptrdiff_t i) { return slice[i]; }) * inv;
  }
  return Palette{hist};
}

HardLayout argmax_labeling(const SoftMask& m) {
  check_soft_mask(m);
  const int ch = m.tensor.classes;
  const int h = m.tensor.height;
  const int w = m.tensor.width;
  HardLayout layout{std::vector<int>(m.tensor.pixels(), 0), h, w, ch};
  par::for_each(static_cast<std::ptrdiff_t>(m.tensor.pixels()), [&](std::ptrdiff_t p) {
    const int i = static_cast<int>(p) / w;
    const int j = static_cast<int>(p) % w;
    int best = 0;
    double best_val = m.tensor(0, i, j);
    for (int c = 1; c < ch; ++c) {
      const double v = m.tensor(c, i, j);
      if (v > best_val) {
        best_val = v;
        best = c;
      }
    }
    layout.labels[p] = best;
  });
  return layout;
}

// --- PGM --------------------------------------------------------------------

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    break;
  }
  if (c == EOF) return tok;
  tok.push_back(static_cast<char>(c));
  while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') {
    tok.push_back(static_cast<char>(c));
  }
  if (c == '#') in.unget();
  return tok;
}

int parse_header_int(const std::string& tok, const char* what) {
  if (tok.empty()) throw IoError(Err::MalformedHeader, std::string("missing ") + what);
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw IoError(Err::MalformedHeader, std::string("bad ") + what + " '" + tok + "'");
    }
  }
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw IoError(Err::MalformedHeader, std::string("bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

HardLayout read_label_map(std::istream& in) {
  const std::string magic = next_token(in);
  if (magic != "P2" && magic != "P5") {
    throw IoError(Err::MalformedHeader, "expected P2 or P5, got '" + magic + "'");
  }
  const int w = parse_header_int(next_token(in), "width");
  const int h = parse_header_int(next_token(in), "height");
  const int maxval = parse_header_int(next_token(in), "maxval");
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
    throw IoError(Err::MalformedHeader, "bad dimensions or maxval");
  }
  const int classes = maxval + 1;
  HardLayout layout{std::vector<int>(static_cast<std::size_t>(h) * w), h, w, classes};
  if (magic == "P2") {
    for (std::size_t p = 0; p < layout.labels.size(); ++p) {
      const std::string tok = next_token(in);
      if (tok.empty()) throw IoError(Err::TruncatedPayload, "ran out of ASCII samples");
      const int v = parse_header_int(tok, "sample");
      if (v > maxval) {
        throw IoError(Err::LabelOutOfRange,
                      "sample " + std::to_string(v) + " > maxval " + std::to_string(maxval));
      }
      layout.labels[p] = v;
    }
  } else {
    if (maxval > 255) throw IoError(Err::MalformedHeader, "P5 label maps are 1 byte/pixel");
    // Exactly one whitespace byte separates the header from the payload.
    for (std::size_t p = 0; p < layout.labels.size(); ++p) {
      const int v = in.get();
      if (v == EOF) throw IoError(Err::TruncatedPayload, "ran out of binary samples");
      if (v > maxval) {
        throw IoError(Err::LabelOutOfRange,
                      "sample " + std::to_string(v) + " > maxval " + std::to_string(maxval));
      }
      layout.labels[p] = v;
    }
  }
  return layout;
}

HardLayout read_label_map_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(Err::TruncatedPayload, "cannot open '" + path + "'");
  return read_label_map(in);
}

void write_label_map(std::ostream& out, const HardLayout& layout) {
  write_label_map(out, layout, layout.classes <= 256 ? PgmFormat::Binary : PgmFormat::Ascii);
}

void write_label_map(std::ostream& out, const HardLayout& layout, PgmFormat format) {
  check_layout(layout);
  const int maxval = layout.classes - 1;
  if (format == PgmFormat::Binary && maxval > 255) {
    throw ValidationError(Err::LabelOutOfRange, "P5 requires classes <= 256");
  }
  if (format == PgmFormat::Ascii) {
    out << "P2\n" << layout.width << " " << layout.height << "\n" << maxval << "\n";
    for (int i = 0; i < layout.height; ++i) {
      for (int j = 0; j < layout.width; ++j) {
        if (j) out << ' ';
        out << layout.at(i, j);
      }
      out << '\n';
    }
  } else {
    out << "P5\n" << layout.width << " " << layout.height << "\n" << maxval << "\n";
    std::vector<unsigned char> bytes(layout.labels.size());
    for (std::size_t p = 0; p < bytes.size(); ++p) {
      bytes[p] = static_cast<unsigned char>(layout.labels[p]);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
}

void write_label_map_file(const std::string& path, const HardLayout& layout) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(Err::TruncatedPayload, "cannot open '" + path + "' for writing");
  write_label_map(out, layout);
}

// --- palette text I/O ---------------------------------------------------------

namespace {

Palette palette_from_json_value(const nlohmann::json& j) {
  if (!j.is_array()) throw IoError(Err::MalformedHeader, "palette JSON must be an array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw IoError(Err::MalformedHeader, "palette entries must be numbers");
    v.push_back(x.get<double>());
  }
  return validate_palette(v);
}

Palette palette_from_csv(const std::string& line) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw IoError(Err::MalformedHeader, "bad decimal '" + item + "' in palette");
    }
  }
  return validate_palette(v);
}

}  // namespace

Palette parse_palette(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw IoError(Err::MalformedHeader, "empty palette text");
  if (text[first] == '[') {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError(Err::MalformedHeader, "unparseable palette JSON");
    return palette_from_json_value(j);
  }
  return palette_from_csv(text);
}

std::vector<Palette> read_palettes(std::istream& in) {
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  std::vector<Palette> out;
  std::stringstream ss(content);
  std::string line;
  bool multiline = false;
  {
    // A single JSON array may span the whole stream; try that first.
    nlohmann::json j = nlohmann::json::parse(content, nullptr, false);
    if (!j.is_discarded() && j.is_array() && !j.empty() && j.front().is_number()) {
      out.push_back(palette_from_json_value(j));
      return out;
    }
    multiline = true;
  }
  if (multiline) {
    while (std::getline(ss, line)) {
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos) continue;
      out.push_back(parse_palette(line));
    }
  }
  return out;
}

std::string palette_to_json(const Palette& p) {
  nlohmann::json j = nlohmann::json::array();
  for (double x : p.proportions) j.push_back(x);
  return j.dump();
}

}  // namespace layoutgen
