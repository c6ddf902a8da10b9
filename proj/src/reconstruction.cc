#include "totalcap/reconstruction.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <cctype>
#include <future>
#include <optional>
#include <sstream>
#include <string>

namespace totalcap {

namespace fs = std::filesystem;
using Kind = ReconstructionError::Kind;

size_t NumParams(CameraModel model) {
  switch (model) {
    case CameraModel::kSimplePinhole:
      return 3;
    case CameraModel::kPinhole:
      return 4;
    case CameraModel::kSimpleRadial:
      return 4;
  }
  return 0;
}

std::string_view ModelName(CameraModel model) {
  switch (model) {
    case CameraModel::kSimplePinhole:
      return "SIMPLE_PINHOLE";
    case CameraModel::kPinhole:
      return "PINHOLE";
    case CameraModel::kSimpleRadial:
      return "SIMPLE_RADIAL";
  }
  return "UNKNOWN";
}

CameraModel ModelFromId(int32_t id) {
  if (id < 0 || id > 2) {
    throw ReconstructionError(Kind::kUnknownCameraModel,
                              "unknown camera model id " + std::to_string(id));
  }
  return static_cast<CameraModel>(id);
}

CameraModel ModelFromName(std::string_view name) {
  for (int32_t id = 0; id <= 2; ++id) {
    if (ModelName(static_cast<CameraModel>(id)) == name) {
      return static_cast<CameraModel>(id);
    }
  }
  throw ReconstructionError(Kind::kUnknownCameraModel,
                            "unknown camera model '" + std::string(name) + "'");
}

namespace {

void ValidateCamera(const Camera& camera) {
  const std::string tag = "camera " + std::to_string(camera.camera_id);
  if (camera.params.size() != NumParams(camera.model)) {
    throw ReconstructionError(Kind::kInvalidCamera, tag + ": wrong parameter count");
  }
  if (camera.width < 1 || camera.height < 1) {
    throw ReconstructionError(Kind::kInvalidCamera, tag + ": zero-sized image");
  }
  const size_t focal_count = camera.model == CameraModel::kPinhole ? 2 : 1;
  for (size_t i = 0; i < focal_count; ++i) {
    if (!(camera.params[i] > 0.0) || !std::isfinite(camera.params[i])) {
      throw ReconstructionError(Kind::kInvalidCamera, tag + ": focal length must be > 0");
    }
  }
}

void ValidateImage(const RegisteredImage& image) {
  const std::string tag = "image " + std::to_string(image.image_id);
  const auto& q = image.qvec;
  const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    throw ReconstructionError(Kind::kInvalidImage, tag + ": quaternion is not unit norm");
  }
  if (image.name.empty()) {
    throw ReconstructionError(Kind::kInvalidImage, tag + ": empty name");
  }
}

template <typename Map, typename Value>
void InsertUnique(Map& map, typename Map::key_type id, Value&& value, const char* what) {
  if (!map.emplace(id, std::forward<Value>(value)).second) {
    throw ReconstructionError(Kind::kDuplicateId,
                              std::string("duplicate ") + what + " id " + std::to_string(id));
  }
}

// ---------------------------------------------------------------------------
// Binary

std::string ReadFileBytes(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw ReconstructionError(Kind::kIo, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return std::move(buffer).str();
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  // `where` names the record being decoded, used in truncation errors.
  void SetContext(std::string where) { where_ = std::move(where); }

  template <typename T>
  T Read() {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(ReadUnsigned<uint64_t>());
    } else if constexpr (std::is_signed_v<T>) {
      return static_cast<T>(ReadUnsigned<std::make_unsigned_t<T>>());
    } else {
      return ReadUnsigned<T>();
    }
  }

  std::string ReadCString() {
    const size_t end = bytes_.find('\0', pos_);
    if (end == std::string_view::npos) {
      Truncated();
    }
    std::string out(bytes_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

 private:
  template <typename U>
  U ReadUnsigned() {
    if (bytes_.size() - pos_ < sizeof(U)) {
      Truncated();
    }
    U value = 0;
    for (size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return value;
  }

  [[noreturn]] void Truncated() const {
    throw ReconstructionError(Kind::kTruncated, "truncated stream at " + where_);
  }

  std::string_view bytes_;
  size_t pos_ = 0;
  std::string where_ = "header";
};

class ByteWriter {
 public:
  template <typename T>
  void Write(T value) {
    if constexpr (std::is_same_v<T, double>) {
      WriteUnsigned(std::bit_cast<uint64_t>(value));
    } else if constexpr (std::is_signed_v<T>) {
      WriteUnsigned(static_cast<std::make_unsigned_t<T>>(value));
    } else {
      WriteUnsigned(value);
    }
  }

  void WriteCString(const std::string& s) {
    bytes_.append(s);
    bytes_.push_back('\0');
  }

  const std::string& bytes() const { return bytes_; }

 private:
  template <typename U>
  void WriteUnsigned(U value) {
    for (size_t i = 0; i < sizeof(U); ++i) {
      bytes_.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
    }
  }

  std::string bytes_;
};

void WriteFileBytes(const fs::path& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw ReconstructionError(Kind::kIo, "cannot write " + path.string());
  }
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) {
    throw ReconstructionError(Kind::kIo, "write failed for " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Text

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

template <typename T>
T ParseToken(std::string_view token, const std::string& where) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ReconstructionError(Kind::kMalformedText,
                              "bad value '" + std::string(token) + "' at " + where);
  }
  return value;
}

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Reads "# Number of <what>: N" style header comments.
std::optional<uint64_t> DeclaredCount(std::string_view comment, std::string_view what) {
  const std::string key = "Number of " + std::string(what) + ":";
  const size_t at = comment.find(key);
  if (at == std::string_view::npos) return std::nullopt;
  auto rest = Trim(comment.substr(at + key.size()));
  const size_t stop = rest.find_first_not_of("0123456789");
  rest = rest.substr(0, stop);
  if (rest.empty()) return std::nullopt;
  return ParseToken<uint64_t>(rest, "header");
}

class TextLines {
 public:
  explicit TextLines(const fs::path& path) : file_(path) {
    if (!file_) {
      throw ReconstructionError(Kind::kIo, "cannot open " + path.string());
    }
  }

  // Next data line, skipping blanks and comments. Header counts are captured.
  bool NextRecord(std::string& line, std::string_view count_key) {
    while (std::getline(file_, line)) {
      ++line_no_;
      const auto trimmed = Trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '#') {
        if (auto n = DeclaredCount(trimmed, count_key)) declared_ = n;
        continue;
      }
      return true;
    }
    return false;
  }

  // Next raw line, used for the observation line following an image record.
  bool NextRaw(std::string& line) {
    if (!std::getline(file_, line)) return false;
    ++line_no_;
    return true;
  }

  std::string Where() const { return "line " + std::to_string(line_no_); }
  std::optional<uint64_t> declared() const { return declared_; }

 private:
  std::ifstream file_;
  size_t line_no_ = 0;
  std::optional<uint64_t> declared_;
};

void CheckDeclared(const TextLines& lines, size_t parsed, const char* what) {
  if (!lines.declared()) return;
  const uint64_t declared = *lines.declared();
  if (parsed < declared) {
    throw ReconstructionError(Kind::kTruncated, std::string("truncated stream at ") + what + " " +
                                                    std::to_string(parsed));
  }
  if (parsed > declared) {
    throw ReconstructionError(Kind::kMalformedText,
                              std::string("more ") + what + " records than declared");
  }
}

std::ofstream OpenText(const fs::path& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) {
    throw ReconstructionError(Kind::kIo, "cannot write " + path.string());
  }
  return file;
}

void CheckWritten(const std::ofstream& file, const fs::path& path) {
  if (!file) {
    throw ReconstructionError(Kind::kIo, "write failed for " + path.string());
  }
}

}  // namespace

void ValidateReconstruction(const Reconstruction& recon) {
  for (const auto& [id, camera] : recon.cameras) {
    if (id != camera.camera_id) {
      throw ReconstructionError(Kind::kInvalidCamera, "camera key/id mismatch");
    }
    ValidateCamera(camera);
  }
  for (const auto& [id, image] : recon.images) {
    if (id != image.image_id) {
      throw ReconstructionError(Kind::kInvalidImage, "image key/id mismatch");
    }
    ValidateImage(image);
    if (!recon.cameras.contains(image.camera_id)) {
      throw ReconstructionError(Kind::kDanglingCameraReference,
                                "image " + std::to_string(id) + " references missing camera " +
                                    std::to_string(image.camera_id));
    }
  }
  for (const auto& [id, point] : recon.points) {
    for (const auto& element : point.track) {
      if (!recon.images.contains(element.image_id)) {
        throw ReconstructionError(Kind::kDanglingImageReference,
                                  "point " + std::to_string(id) + " references missing image " +
                                      std::to_string(element.image_id));
      }
    }
  }
}

std::map<uint32_t, Camera> ReadCamerasBinary(const fs::path& path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader reader(bytes);
  const uint64_t count = reader.Read<uint64_t>();
  std::map<uint32_t, Camera> cameras;
  for (uint64_t k = 0; k < count; ++k) {
    reader.SetContext("camera " + std::to_string(k));
    Camera camera;
    camera.camera_id = reader.Read<uint32_t>();
    camera.model = ModelFromId(reader.Read<int32_t>());
    camera.width = reader.Read<uint64_t>();
    camera.height = reader.Read<uint64_t>();
    camera.params.resize(NumParams(camera.model));
    for (double& p : camera.params) p = reader.Read<double>();
    ValidateCamera(camera);
    InsertUnique(cameras, camera.camera_id, std::move(camera), "camera");
  }
  return cameras;
}

std::map<uint32_t, RegisteredImage> ReadImagesBinary(const fs::path& path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader reader(bytes);
  const uint64_t count = reader.Read<uint64_t>();
  std::map<uint32_t, RegisteredImage> images;
  for (uint64_t k = 0; k < count; ++k) {
    reader.SetContext("image " + std::to_string(k));
    RegisteredImage image;
    image.image_id = reader.Read<uint32_t>();
    for (double& q : image.qvec) q = reader.Read<double>();
    for (double& t : image.tvec) t = reader.Read<double>();
    image.camera_id = reader.Read<uint32_t>();
    image.name = reader.ReadCString();
    const uint64_t num_obs = reader.Read<uint64_t>();
    // Each observation is 24 bytes; never reserve more than the stream can hold.
    image.observations.reserve(std::min<uint64_t>(num_obs, bytes.size() / 24));
    for (uint64_t j = 0; j < num_obs; ++j) {
      Observation obs;
      obs.x = reader.Read<double>();
      obs.y = reader.Read<double>();
      obs.point3d_id = reader.Read<uint64_t>();
      image.observations.push_back(obs);
    }
    ValidateImage(image);
    InsertUnique(images, image.image_id, std::move(image), "image");
  }
  return images;
}

std::map<uint64_t, Point3D> ReadPoints3DBinary(const fs::path& path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader reader(bytes);
  const uint64_t count = reader.Read<uint64_t>();
  std::map<uint64_t, Point3D> points;
  for (uint64_t k = 0; k < count; ++k) {
    reader.SetContext("point " + std::to_string(k));
    Point3D point;
    point.point3d_id = reader.Read<uint64_t>();
    for (double& x : point.xyz) x = reader.Read<double>();
    for (uint8_t& c : point.rgb) c = reader.Read<uint8_t>();
    point.error = reader.Read<double>();
    const uint64_t track_len = reader.Read<uint64_t>();
    point.track.reserve(std::min<uint64_t>(track_len, bytes.size() / 8));
    for (uint64_t j = 0; j < track_len; ++j) {
      TrackElement element;
      element.image_id = reader.Read<uint32_t>();
      element.obs_idx = reader.Read<uint32_t>();
      point.track.push_back(element);
    }
    InsertUnique(points, point.point3d_id, std::move(point), "point");
  }
  return points;
}

void WriteCamerasBinary(const Reconstruction& recon, const fs::path& path) {
  ByteWriter writer;
  writer.Write<uint64_t>(recon.cameras.size());
  for (const auto& [id, camera] : recon.cameras) {
    writer.Write<uint32_t>(camera.camera_id);
    writer.Write<int32_t>(static_cast<int32_t>(camera.model));
    writer.Write<uint64_t>(camera.width);
    writer.Write<uint64_t>(camera.height);
    for (double p : camera.params) writer.Write<double>(p);
  }
  WriteFileBytes(path, writer.bytes());
}

void WriteImagesBinary(const Reconstruction& recon, const fs::path& path) {
  ByteWriter writer;
  writer.Write<uint64_t>(recon.images.size());
  for (const auto& [id, image] : recon.images) {
    if (image.name.find('\0') != std::string::npos) {
      throw ReconstructionError(Kind::kUnrepresentable,
                                "image " + std::to_string(id) + ": name contains NUL");
    }
    writer.Write<uint32_t>(image.image_id);
    for (double q : image.qvec) writer.Write<double>(q);
    for (double t : image.tvec) writer.Write<double>(t);
    writer.Write<uint32_t>(image.camera_id);
    writer.WriteCString(image.name);
    writer.Write<uint64_t>(image.observations.size());
    for (const auto& obs : image.observations) {
      writer.Write<double>(obs.x);
      writer.Write<double>(obs.y);
      writer.Write<uint64_t>(obs.point3d_id);
    }
  }
  WriteFileBytes(path, writer.bytes());
}

void WritePoints3DBinary(const Reconstruction& recon, const fs::path& path) {
  ByteWriter writer;
  writer.Write<uint64_t>(recon.points.size());
  for (const auto& [id, point] : recon.points) {
    writer.Write<uint64_t>(point.point3d_id);
    for (double x : point.xyz) writer.Write<double>(x);
    for (uint8_t c : point.rgb) writer.Write<uint8_t>(c);
    writer.Write<double>(point.error);
    writer.Write<uint64_t>(point.track.size());
    for (const auto& element : point.track) {
      writer.Write<uint32_t>(element.image_id);
      writer.Write<uint32_t>(element.obs_idx);
    }
  }
  WriteFileBytes(path, writer.bytes());
}

std::map<uint32_t, Camera> ReadCamerasText(const fs::path& path) {
  TextLines lines(path);
  std::map<uint32_t, Camera> cameras;
  std::string line;
  while (lines.NextRecord(line, "cameras")) {
    const auto tokens = SplitWhitespace(line);
    const std::string where = lines.Where();
    if (tokens.size() < 4) {
      throw ReconstructionError(Kind::kMalformedText, "short camera record at " + where);
    }
    Camera camera;
    camera.camera_id = ParseToken<uint32_t>(tokens[0], where);
    camera.model = ModelFromName(tokens[1]);
    camera.width = ParseToken<uint64_t>(tokens[2], where);
    camera.height = ParseToken<uint64_t>(tokens[3], where);
    if (tokens.size() != 4 + NumParams(camera.model)) {
      throw ReconstructionError(Kind::kMalformedText, "wrong parameter count at " + where);
    }
    for (size_t i = 4; i < tokens.size(); ++i) {
      camera.params.push_back(ParseToken<double>(tokens[i], where));
    }
    ValidateCamera(camera);
    InsertUnique(cameras, camera.camera_id, std::move(camera), "camera");
  }
  CheckDeclared(lines, cameras.size(), "camera");
  return cameras;
}

std::map<uint32_t, RegisteredImage> ReadImagesText(const fs::path& path) {
  TextLines lines(path);
  std::map<uint32_t, RegisteredImage> images;
  std::string line;
  while (lines.NextRecord(line, "images")) {
    auto tokens = SplitWhitespace(line);
    std::string where = lines.Where();
    if (tokens.size() != 10) {
      throw ReconstructionError(Kind::kMalformedText, "bad image record at " + where);
    }
    RegisteredImage image;
    image.image_id = ParseToken<uint32_t>(tokens[0], where);
    for (int i = 0; i < 4; ++i) image.qvec[i] = ParseToken<double>(tokens[1 + i], where);
    for (int i = 0; i < 3; ++i) image.tvec[i] = ParseToken<double>(tokens[5 + i], where);
    image.camera_id = ParseToken<uint32_t>(tokens[8], where);
    image.name = std::string(tokens[9]);

    std::string obs_line;
    if (!lines.NextRaw(obs_line)) {
      throw ReconstructionError(Kind::kTruncated, "truncated stream at image " +
                                                      std::to_string(images.size()));
    }
    tokens = SplitWhitespace(obs_line);
    where = lines.Where();
    if (tokens.size() % 3 != 0) {
      throw ReconstructionError(Kind::kMalformedText, "bad observation list at " + where);
    }
    for (size_t i = 0; i < tokens.size(); i += 3) {
      Observation obs;
      obs.x = ParseToken<double>(tokens[i], where);
      obs.y = ParseToken<double>(tokens[i + 1], where);
      obs.point3d_id = tokens[i + 2] == "-1" ? kInvalidPoint3DId
                                             : ParseToken<uint64_t>(tokens[i + 2], where);
      image.observations.push_back(obs);
    }
    ValidateImage(image);
    InsertUnique(images, image.image_id, std::move(image), "image");
  }
  CheckDeclared(lines, images.size(), "image");
  return images;
}

std::map<uint64_t, Point3D> ReadPoints3DText(const fs::path& path) {
  TextLines lines(path);
  std::map<uint64_t, Point3D> points;
  std::string line;
  while (lines.NextRecord(line, "points")) {
    const auto tokens = SplitWhitespace(line);
    const std::string where = lines.Where();
    if (tokens.size() < 8 || (tokens.size() - 8) % 2 != 0) {
      throw ReconstructionError(Kind::kMalformedText, "bad point record at " + where);
    }
    Point3D point;
    point.point3d_id = ParseToken<uint64_t>(tokens[0], where);
    for (int i = 0; i < 3; ++i) point.xyz[i] = ParseToken<double>(tokens[1 + i], where);
    for (int i = 0; i < 3; ++i) {
      const auto c = ParseToken<unsigned>(tokens[4 + i], where);
      if (c > 255) {
        throw ReconstructionError(Kind::kMalformedText, "color out of range at " + where);
      }
      point.rgb[i] = static_cast<uint8_t>(c);
    }
    point.error = ParseToken<double>(tokens[7], where);
    for (size_t i = 8; i < tokens.size(); i += 2) {
      point.track.push_back({ParseToken<uint32_t>(tokens[i], where),
                             ParseToken<uint32_t>(tokens[i + 1], where)});
    }
    InsertUnique(points, point.point3d_id, std::move(point), "point");
  }
  CheckDeclared(lines, points.size(), "point");
  return points;
}

void WriteCamerasText(const Reconstruction& recon, const fs::path& path) {
  auto file = OpenText(path);
  file << "# Camera list with one line of data per camera:\n"
       << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
       << "# Number of cameras: " << recon.cameras.size() << "\n";
  for (const auto& [id, camera] : recon.cameras) {
    file << camera.camera_id << ' ' << ModelName(camera.model) << ' ' << camera.width << ' '
         << camera.height;
    for (double p : camera.params) file << ' ' << FormatDouble(p);
    file << '\n';
  }
  CheckWritten(file, path);
}

void WriteImagesText(const Reconstruction& recon, const fs::path& path) {
  size_t total_obs = 0;
  for (const auto& [id, image] : recon.images) total_obs += image.observations.size();
  const double mean_obs =
      recon.images.empty() ? 0.0 : static_cast<double>(total_obs) / recon.images.size();

  auto file = OpenText(path);
  file << "# Image list with two lines of data per image:\n"
       << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
       << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
       << "# Number of images: " << recon.images.size()
       << ", mean observations per image: " << FormatDouble(mean_obs) << "\n";
  for (const auto& [id, image] : recon.images) {
    const auto name_tokens = SplitWhitespace(image.name);
    if (name_tokens.size() != 1 || name_tokens[0].size() != image.name.size()) {
      throw ReconstructionError(Kind::kUnrepresentable,
                                "image " + std::to_string(id) + ": name contains whitespace");
    }
    file << image.image_id;
    for (double q : image.qvec) file << ' ' << FormatDouble(q);
    for (double t : image.tvec) file << ' ' << FormatDouble(t);
    file << ' ' << image.camera_id << ' ' << image.name << '\n';
    bool first = true;
    for (const auto& obs : image.observations) {
      if (!first) file << ' ';
      first = false;
      file << FormatDouble(obs.x) << ' ' << FormatDouble(obs.y) << ' ';
      if (obs.point3d_id == kInvalidPoint3DId) {
        file << "-1";
      } else {
        file << obs.point3d_id;
      }
    }
    file << '\n';
  }
  CheckWritten(file, path);
}

void WritePoints3DText(const Reconstruction& recon, const fs::path& path) {
  size_t total_track = 0;
  for (const auto& [id, point] : recon.points) total_track += point.track.size();
  const double mean_track =
      recon.points.empty() ? 0.0 : static_cast<double>(total_track) / recon.points.size();

  auto file = OpenText(path);
  file << "# 3D point list with one line of data per point:\n"
       << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n"
       << "# Number of points: " << recon.points.size()
       << ", mean track length: " << FormatDouble(mean_track) << "\n";
  for (const auto& [id, point] : recon.points) {
    file << point.point3d_id;
    for (double x : point.xyz) file << ' ' << FormatDouble(x);
    for (uint8_t c : point.rgb) file << ' ' << static_cast<unsigned>(c);
    file << ' ' << FormatDouble(point.error);
    for (const auto& element : point.track) {
      file << ' ' << element.image_id << ' ' << element.obs_idx;
    }
    file << '\n';
  }
  CheckWritten(file, path);
}

Reconstruction ParseReconstruction(const fs::path& dir, FileFormat format) {
  const bool binary = format == FileFormat::kBinary;
  const char* ext = binary ? ".bin" : ".txt";
  const fs::path cameras_path = dir / (std::string("cameras") + ext);
  const fs::path images_path = dir / (std::string("images") + ext);
  const fs::path points_path = dir / (std::string("points3D") + ext);

  auto cameras = std::async(std::launch::async, [&] {
    return binary ? ReadCamerasBinary(cameras_path) : ReadCamerasText(cameras_path);
  });
  auto images = std::async(std::launch::async, [&] {
    return binary ? ReadImagesBinary(images_path) : ReadImagesText(images_path);
  });
  auto points = std::async(std::launch::async, [&] {
    return binary ? ReadPoints3DBinary(points_path) : ReadPoints3DText(points_path);
  });

  Reconstruction recon;
  recon.cameras = cameras.get();
  recon.images = images.get();
  recon.points = points.get();
  ValidateReconstruction(recon);
  return recon;
}

void SerializeReconstruction(const Reconstruction& recon, const fs::path& dir,
                             FileFormat format) {
  ValidateReconstruction(recon);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ReconstructionError(Kind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  }
  if (format == FileFormat::kBinary) {
    WriteCamerasBinary(recon, dir / "cameras.bin");
    WriteImagesBinary(recon, dir / "images.bin");
    WritePoints3DBinary(recon, dir / "points3D.bin");
  } else {
    WriteCamerasText(recon, dir / "cameras.txt");
    WriteImagesText(recon, dir / "images.txt");
    WritePoints3DText(recon, dir / "points3D.txt");
  }
}

}  // namespace totalcap
