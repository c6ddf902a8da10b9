#include "totalcap/image_io.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace totalcap {

namespace {

cv::Mat ToBgr(const Image& image) {
  if (image.channels != 3) {
    throw std::invalid_argument("expected a 3-channel image");
  }
  cv::Mat out(static_cast<int>(image.height), static_cast<int>(image.width), CV_64FC3);
  for (uint32_t y = 0; y < image.height; ++y) {
    auto* row = out.ptr<cv::Vec3d>(static_cast<int>(y));
    for (uint32_t x = 0; x < image.width; ++x) {
      row[x] = cv::Vec3d(image.at(2, y, x), image.at(1, y, x), image.at(0, y, x));
    }
  }
  return out;
}

Image FromBgr(const cv::Mat& bgr) {
  Image image(3, static_cast<uint32_t>(bgr.rows), static_cast<uint32_t>(bgr.cols));
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3d>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      image.at(0, y, x) = row[x][2];
      image.at(1, y, x) = row[x][1];
      image.at(2, y, x) = row[x][0];
    }
  }
  return image;
}

}  // namespace

Image LoadRgb(const std::filesystem::path& path) {
  const cv::Mat bgr8 = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr8.empty()) {
    throw std::runtime_error("cannot read image " + path.string());
  }
  cv::Mat bgr;
  bgr8.convertTo(bgr, CV_64FC3, 1.0 / 255.0);
  return FromBgr(bgr);
}

void SaveRgb(const Image& image, const std::filesystem::path& path) {
  cv::Mat bgr8;
  ToBgr(image).convertTo(bgr8, CV_8UC3, 255.0);
  if (!cv::imwrite(path.string(), bgr8)) {
    throw std::runtime_error("cannot write image " + path.string());
  }
}

Image ResizeArea(const Image& image, uint32_t width, uint32_t height) {
  if (image.width == width && image.height == height) return image;
  cv::Mat resized;
  cv::resize(ToBgr(image), resized, cv::Size(static_cast<int>(width), static_cast<int>(height)),
             0, 0, cv::INTER_AREA);
  return FromBgr(resized);
}

LabelMap LoadLabelMap(const std::filesystem::path& path) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    throw std::runtime_error("cannot read label map " + path.string());
  }
  if (raw.type() != CV_8UC1) {
    throw std::runtime_error("label map must be single-channel 8-bit: " + path.string());
  }
  LabelMap labels(static_cast<uint32_t>(raw.rows), static_cast<uint32_t>(raw.cols));
  for (int y = 0; y < raw.rows; ++y) {
    std::copy_n(raw.ptr<uint8_t>(y), raw.cols, labels.classes.begin() + size_t(y) * raw.cols);
  }
  return labels;
}

void SaveLabelMap(const LabelMap& labels, const std::filesystem::path& path) {
  cv::Mat raw(static_cast<int>(labels.height), static_cast<int>(labels.width), CV_8UC1);
  for (uint32_t y = 0; y < labels.height; ++y) {
    std::copy_n(labels.classes.begin() + size_t{y} * labels.width, labels.width,
                raw.ptr<uint8_t>(static_cast<int>(y)));
  }
  if (!cv::imwrite(path.string(), raw)) {
    throw std::runtime_error("cannot write label map " + path.string());
  }
}

LabelMap ResizeNearest(const LabelMap& labels, uint32_t width, uint32_t height) {
  if (labels.width == width && labels.height == height) return labels;
  LabelMap out(height, width);
  for (uint32_t y = 0; y < height; ++y) {
    const auto sy = static_cast<uint32_t>(
        std::min<uint64_t>(labels.height - 1, uint64_t{y} * labels.height / height));
    for (uint32_t x = 0; x < width; ++x) {
      const auto sx = static_cast<uint32_t>(
          std::min<uint64_t>(labels.width - 1, uint64_t{x} * labels.width / width));
      out.at(y, x) = labels.at(sy, sx);
    }
  }
  return out;
}

}  // namespace totalcap
