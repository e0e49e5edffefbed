#include "dp/ply.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace dp {

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("write_ply: empty cloud");
  if (!cloud.all_finite()) throw InvalidInput("write_ply: non-finite coordinate");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("write_ply: cannot open '" + path.string() + "'");
  os << "ply\n"
     << "format ascii 1.0\n"
     << "comment units centimeters\n"
     << "element vertex " << cloud.size() << "\n"
     << "property float x\n"
     << "property float y\n"
     << "property float z\n"
     << "end_header\n";
  char line[128];
  for (const Vec3& p : cloud.points) {
    std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    os << line;
  }
  if (!os) throw IoError("write_ply: write failed for '" + path.string() + "'");
}

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line_no,
                       const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream iss(line);
  std::vector<std::string> toks;
  std::string t;
  while (iss >> t) toks.push_back(t);
  return toks;
}

double parse_double(const std::string& tok, const std::filesystem::path& path,
                    std::size_t line_no) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    fail(path, line_no, "bad numeric token '" + tok + "'");
  return value;
}

struct ElementDecl {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
};

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_ply: cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    return false;
  };

  if (!next_line() || line != "ply") fail(path, line_no ? line_no : 1, "missing 'ply' magic");
  if (!next_line() || tokens_of(line) != std::vector<std::string>{"format", "ascii", "1.0"})
    fail(path, line_no, "only 'format ascii 1.0' is supported");

  std::vector<ElementDecl> elements;
  bool header_done = false;
  while (!header_done) {
    if (!next_line()) fail(path, line_no, "unexpected end of header");
    const auto toks = tokens_of(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "element") {
      if (toks.size() != 3) fail(path, line_no, "malformed element declaration");
      ElementDecl decl;
      decl.name = toks[1];
      try {
        decl.count = std::stoul(toks[2]);
      } catch (const std::exception&) {
        fail(path, line_no, "bad element count '" + toks[2] + "'");
      }
      elements.push_back(std::move(decl));
    } else if (toks[0] == "property") {
      if (elements.empty()) fail(path, line_no, "property before any element");
      if (toks.size() < 3) fail(path, line_no, "malformed property declaration");
      if (toks[1] == "list") {
        elements.back().properties.push_back("<list>");
      } else {
        elements.back().properties.push_back(toks.back());
      }
    } else if (toks[0] == "end_header") {
      header_done = true;
    } else {
      fail(path, line_no, "unrecognized header line '" + toks[0] + "'");
    }
  }

  PointCloud cloud;
  bool found_vertex = false;
  for (const ElementDecl& decl : elements) {
    if (decl.name != "vertex") {
      // Skip this element's data (one line per instance).
      for (std::size_t i = 0; i < decl.count; ++i)
        if (!next_line()) fail(path, line_no, "unexpected end of file in '" + decl.name + "'");
      continue;
    }
    found_vertex = true;
    if (decl.count == 0) fail(path, line_no, "vertex element is empty");
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t p = 0; p < decl.properties.size(); ++p) {
      if (decl.properties[p] == "x") ix = static_cast<int>(p);
      if (decl.properties[p] == "y") iy = static_cast<int>(p);
      if (decl.properties[p] == "z") iz = static_cast<int>(p);
    }
    if (ix < 0 || iy < 0 || iz < 0)
      fail(path, line_no, "vertex element lacks x/y/z properties");

    cloud.points.reserve(decl.count);
    for (std::size_t i = 0; i < decl.count; ++i) {
      if (!next_line()) fail(path, line_no, "unexpected end of file in vertex data");
      const auto toks = tokens_of(line);
      if (toks.size() < decl.properties.size())
        fail(path, line_no, "vertex line has too few values");
      const Vec3 p{parse_double(toks[static_cast<std::size_t>(ix)], path, line_no),
                   parse_double(toks[static_cast<std::size_t>(iy)], path, line_no),
                   parse_double(toks[static_cast<std::size_t>(iz)], path, line_no)};
      if (!p.finite()) fail(path, line_no, "non-finite vertex coordinate");
      cloud.points.push_back(p);
    }
    break;  // remaining elements are ignored
  }
  if (!found_vertex) fail(path, line_no, "no vertex element");
  return cloud;
}

}  // namespace dp
