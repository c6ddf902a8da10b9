#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "totalcap/image.h"

namespace totalcap {

inline constexpr int kNumClasses = 150;
inline constexpr uint8_t kUnlabeled = 255;

using Rgb8 = std::array<uint8_t, 3>;

struct PaletteEntry {
  std::string name;
  Rgb8 rgb{};

  bool operator==(const PaletteEntry&) const = default;
};

class SemanticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One color per class; construction rejects duplicate colors and black,
// which is reserved for unlabeled pixels.
class Palette {
 public:
  explicit Palette(std::vector<PaletteEntry> entries);

  const PaletteEntry& operator[](size_t class_id) const { return entries_[class_id]; }
  size_t size() const { return entries_.size(); }

  // Class whose color is `rgb`, kUnlabeled for black, -1 if no match.
  int ClassForColor(const Rgb8& rgb) const;
  int ClassByName(std::string_view name) const;

  bool operator==(const Palette& other) const { return entries_ == other.entries_; }

 private:
  std::vector<PaletteEntry> entries_;
};

// ADE20K class names and colors. Class 48 (skyscraper) is shifted to
// (140, 140, 141) because the reference table gives it the same color as
// class 6 (road).
const Palette& Ade20kPalette();

// JSON asset: array of {class_id, name, rgb}.
Palette LoadPalette(const std::filesystem::path& path);
void SavePalette(const Palette& palette, const std::filesystem::path& path);

void ValidateLabelMap(const LabelMap& labels);

// 3-channel image in [0, 1]; unlabeled pixels become black.
// Throws SemanticError("class out of range") for values in [150, 254].
Image EncodeLabels(const LabelMap& labels, const Palette& palette);
// Inverse of EncodeLabels; throws if a pixel matches no palette color.
LabelMap DecodeLabels(const Image& encoded, const Palette& palette);

// person, car, bus, truck, van, minibike, bicycle, boat, airplane, animal.
std::vector<int> DefaultTransientClasses();

// 1 where the pixel's class is in `transient_classes`, else 0.
std::vector<uint8_t> TransientMask(const LabelMap& labels, std::span<const int> transient_classes);

}  // namespace totalcap
