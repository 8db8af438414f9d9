#include "flatcore/field_io.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>

namespace flatcore {

namespace {

const char* domain_name(DomainKind k) {
  return k == DomainKind::rectangle ? "rectangle" : "unit-disk";
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void save_field(const std::string& path, const ScalarField& u) {
  const Mesh& m = *u.mesh;
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_field: cannot open " + path);
  std::fprintf(f, "flatcore-field v1\n");
  std::fprintf(f, "domain %s\n", domain_name(m.kind));
  std::fprintf(f, "counts %d %d\n", m.n_vertices(), m.n_triangles());
  for (int i = 0; i < m.n_vertices(); ++i)
    std::fprintf(f, "v %.17g %.17g %d\n", m.vertices[i].x, m.vertices[i].y, m.is_boundary[i] ? 1 : 0);
  for (int t = 0; t < m.n_triangles(); ++t)
    std::fprintf(f, "t %d %d %d\n", m.triangles[t][0], m.triangles[t][1], m.triangles[t][2]);
  for (int i = 0; i < m.n_vertices(); ++i) std::fprintf(f, "f %.17g\n", u.v[i]);
  if (std::fclose(f) != 0) throw std::runtime_error("save_field: write failed for " + path);
}

LoadedField load_field(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw std::runtime_error("load_field: cannot open " + path);
  char buf[256];
  int line = 0;
  auto next_line = [&]() -> char* {
    ++line;
    return std::fgets(buf, sizeof buf, f);
  };

  LoadedField out;
  out.mesh = std::make_unique<Mesh>();
  Mesh& m = *out.mesh;

  if (!next_line() || std::string(buf) != "flatcore-field v1\n") fail(path, line, "bad magic line");
  char word[32];
  if (!next_line() || std::sscanf(buf, "domain %31s", word) != 1) fail(path, line, "bad domain line");
  const std::string dom(word);
  if (dom == "rectangle")
    m.kind = DomainKind::rectangle;
  else if (dom == "unit-disk")
    m.kind = DomainKind::unit_disk;
  else
    fail(path, line, "unknown domain kind '" + dom + "'");
  int nv = 0, nt = 0;
  if (!next_line() || std::sscanf(buf, "counts %d %d", &nv, &nt) != 2 || nv < 3 || nt < 1)
    fail(path, line, "bad counts line");

  m.vertices.resize(nv);
  m.is_boundary.assign(nv, 0);
  for (int i = 0; i < nv; ++i) {
    int b = 0;
    if (!next_line() || std::sscanf(buf, "v %lg %lg %d", &m.vertices[i].x, &m.vertices[i].y, &b) != 3)
      fail(path, line, "bad vertex record");
    m.is_boundary[i] = b ? 1 : 0;
  }
  m.triangles.resize(nt);
  for (int t = 0; t < nt; ++t) {
    auto& tri = m.triangles[t];
    if (!next_line() || std::sscanf(buf, "t %d %d %d", &tri[0], &tri[1], &tri[2]) != 3)
      fail(path, line, "bad triangle record");
  }
  out.field.v.resize(nv);
  for (int i = 0; i < nv; ++i)
    if (!next_line() || std::sscanf(buf, "f %lg", &out.field.v[i]) != 1)
      fail(path, line, "bad value record");
  std::fclose(f);

  // boundary edges = triangle edges with a single adjacent triangle,
  // oriented as they appear in the (CCW) triangles
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto& tri : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if (edge_count[{std::min(a, b), std::max(a, b)}] == 1) m.boundary_edges.push_back({a, b});
    }
  m.finalize();
  out.field.mesh = out.mesh.get();
  return out;
}

}  // namespace flatcore
