#include "fts/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <png.h>

namespace fts {

Mask invert(const Mask& mask) {
  Mask out(mask.width, mask.height);
  for (size_t i = 0; i < mask.size(); ++i) out.data[i] = mask.data[i] ? 0 : 1;
  return out;
}

std::size_t count_set(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.data.begin(), mask.data.end(), [](auto v) { return v != 0; }));
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Mask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  if (pgm_token(in) != "P5") throw Error(Errc::Parse, path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw Error(Errc::Parse, path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw Error(Errc::Parse, path.string() + ": unsupported PGM dimensions or maxval");
  Mask mask(w, h);
  std::vector<char> raw(mask.size());
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw Error(Errc::Parse, path.string() + ": truncated PGM data");
  for (size_t i = 0; i < raw.size(); ++i) mask.data[i] = raw[i] != 0 ? 1 : 0;
  return mask;
}

void write_pgm(const std::filesystem::path& path, const Mask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  std::vector<char> raw(mask.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = mask.data[i] ? static_cast<char>(255) : 0;
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(Errc::Io, "failed writing " + path.string());
}

Mask read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw Error(Errc::Parse, path.string() + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(Errc::Parse, path.string() + ": " + image.message);
  }
  Mask mask(static_cast<int>(image.width), static_cast<int>(image.height));
  for (size_t i = 0; i < mask.size(); ++i) mask.data[i] = buffer[i] != 0 ? 1 : 0;
  return mask;
}

Mask read_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  if (in.gcount() >= 2 && sig[0] == 'P' && sig[1] == '5') return read_pgm(path);
  if (in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  throw Error(Errc::Parse, path.string() + ": mask must be a P5 PGM or a PNG");
}

}  // namespace fts
