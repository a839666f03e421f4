#include <cctype>
#include <fstream>
#include <iterator>

#include "sketchparse/imaging/raster.hpp"

namespace sketchparse::imaging {

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string next_token(const std::string& buf, std::size_t& pos, const std::string& where) {
  while (pos < buf.size()) {
    if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  if (start == pos) throw ImageIoError(where + ": truncated PGM header");
  return buf.substr(start, pos - start);
}

std::size_t parse_positive(const std::string& tok, const std::string& where) {
  std::size_t value = 0;
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ImageIoError(where + ": bad PGM header field '" + tok + "'");
    }
    value = value * 10 + static_cast<std::size_t>(c - '0');
    if (value > (1u << 20)) throw ImageIoError(where + ": PGM dimension too large");
  }
  return value;
}

}  // namespace

template <typename Tag>
Grid<Tag> read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string();
  std::size_t pos = 0;
  if (next_token(buf, pos, where) != "P5") throw ImageIoError(where + ": not a binary PGM (P5)");
  const std::size_t width = parse_positive(next_token(buf, pos, where), where);
  const std::size_t height = parse_positive(next_token(buf, pos, where), where);
  const std::size_t maxval = parse_positive(next_token(buf, pos, where), where);
  if (width == 0 || height == 0) throw ImageIoError(where + ": empty PGM");
  if (maxval != 255) throw ImageIoError(where + ": maxval must be 255");
  ++pos;  // single whitespace byte before raster data
  if (buf.size() < pos + width * height) throw ImageIoError(where + ": truncated PGM data");
  std::vector<std::uint8_t> px(buf.begin() + static_cast<long>(pos),
                               buf.begin() + static_cast<long>(pos + width * height));
  return Grid<Tag>(width, height, std::move(px));
}

std::string encode_pgm(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& px) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(px.begin(), px.end());
  return out;
}

template <typename Tag>
void write_pgm(const Grid<Tag>& image, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  const std::string bytes = encode_pgm(image.width(), image.height(), image.pixels());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("write failed for " + path.string());
}

template Grid<RasterTag> read_pgm(const std::filesystem::path&);
template Grid<LabelTag> read_pgm(const std::filesystem::path&);
template void write_pgm(const Grid<RasterTag>&, const std::filesystem::path&);
template void write_pgm(const Grid<LabelTag>&, const std::filesystem::path&);

}  // namespace sketchparse::imaging
