#include "flatcore/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>

namespace flatcore {

namespace {

Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

// Polygon area (shoelace) of the ordered boundary loop, used to check the
// partition-of-unity invariant against an independently computed value.
double boundary_polygon_area(const Mesh& m) {
  // orient the boundary edges into a loop
  std::map<int, int> next;
  for (const auto& e : m.boundary_edges) next[e[0]] = e[1];
  if (next.empty()) throw std::runtime_error("mesh has no boundary edges");
  const int start = next.begin()->first;
  double twice_area = 0.0;
  int cur = start;
  size_t steps = 0;
  do {
    auto it = next.find(cur);
    if (it == next.end()) throw std::runtime_error("boundary edges do not close a loop");
    const int nxt = it->second;
    twice_area += cross(m.vertices[cur], m.vertices[nxt]);
    cur = nxt;
    if (++steps > m.boundary_edges.size() + 1)
      throw std::runtime_error("boundary loop does not close");
  } while (cur != start);
  return 0.5 * std::abs(twice_area);
}

}  // namespace

void Mesh::finalize() {
  const int nv = n_vertices();
  const int nt = n_triangles();
  if (nv < 3 || nt < 1) throw std::invalid_argument("mesh: too few vertices/triangles");

  tri_area.assign(nt, 0.0);
  grad_hat.assign(nt, {});
  lumped_mass.assign(nv, 0.0);
  total_area = 0.0;

  for (int t = 0; t < nt; ++t) {
    auto& tri = triangles[t];
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= nv) throw std::invalid_argument("mesh: triangle index out of range");
    const Vec2 p0 = vertices[tri[0]], p1 = vertices[tri[1]], p2 = vertices[tri[2]];
    const double twice = cross(p1 - p0, p2 - p0);
    if (twice <= 0.0) throw std::invalid_argument("mesh: non-positive triangle area (orientation?)");
    const double area = 0.5 * twice;
    tri_area[t] = area;
    total_area += area;
    const Vec2 p[3] = {p0, p1, p2};
    for (int k = 0; k < 3; ++k)
      grad_hat[t][k] = perp(p[(k + 2) % 3] - p[(k + 1) % 3]) * (1.0 / twice);
    for (int k = 0; k < 3; ++k) lumped_mass[tri[k]] += area / 3.0;
  }

  const double poly_area = boundary_polygon_area(*this);
  if (std::abs(total_area - poly_area) > 1e-12 * poly_area)
    throw std::runtime_error("mesh: triangle areas do not sum to the polygon area");

  // connectivity (BFS over shared-vertex adjacency)
  {
    std::vector<std::vector<int>> vert_tris(nv);
    for (int t = 0; t < nt; ++t)
      for (int k = 0; k < 3; ++k) vert_tris[triangles[t][k]].push_back(t);
    std::vector<char> seen(nv, 0);
    std::queue<int> bfs;
    bfs.push(triangles[0][0]);
    seen[triangles[0][0]] = 1;
    int count = 1;
    while (!bfs.empty()) {
      const int v = bfs.front();
      bfs.pop();
      for (int t : vert_tris[v])
        for (int k = 0; k < 3; ++k) {
          const int w = triangles[t][k];
          if (!seen[w]) {
            seen[w] = 1;
            ++count;
            bfs.push(w);
          }
        }
    }
    if (count != nv) throw std::runtime_error("mesh: not connected");
  }

  // exact distance to the polygonal boundary
  boundary_dist.assign(nv, 0.0);
  for (int v = 0; v < nv; ++v) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& e : boundary_edges)
      d = std::min(d, dist_point_segment(vertices[v], vertices[e[0]], vertices[e[1]]));
    boundary_dist[v] = d;
  }
  const double scale = std::sqrt(total_area);
  for (int v = 0; v < nv; ++v) {
    if (is_boundary[v] && boundary_dist[v] > 1e-12 * scale)
      throw std::runtime_error("mesh: boundary-flagged vertex off the boundary");
    if (is_boundary[v]) boundary_dist[v] = 0.0;
  }
}

Mesh build_rect_mesh(double lx, double ly, int nx, int ny) {
  if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("build_rect_mesh: dimensions must be positive");
  if (nx < 2 || ny < 2) throw std::invalid_argument("build_rect_mesh: nx, ny must be >= 2");

  Mesh m;
  m.kind = DomainKind::rectangle;
  const double hx = lx / nx, hy = ly / ny;
  m.vertices.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
  m.is_boundary.assign(static_cast<size_t>(nx + 1) * (ny + 1), 0);
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      m.vertices.push_back({i * hx, j * hy});
      if (i == 0 || i == nx || j == 0 || j == ny) m.is_boundary[vid(i, j)] = 1;
    }
  m.triangles.reserve(static_cast<size_t>(nx) * ny * 2);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  for (int i = 0; i < nx; ++i) m.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0)});
  for (int j = 0; j < ny; ++j) m.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1)});
  for (int i = nx; i > 0; --i) m.boundary_edges.push_back({vid(i, ny), vid(i - 1, ny)});
  for (int j = ny; j > 0; --j) m.boundary_edges.push_back({vid(0, j), vid(0, j - 1)});
  m.finalize();
  return m;
}

Mesh build_disk_mesh(int n_rings, int n_sectors) {
  if (n_rings < 1) throw std::invalid_argument("build_disk_mesh: n_rings must be >= 1");
  if (n_sectors < 3) throw std::invalid_argument("build_disk_mesh: n_sectors must be >= 3");

  Mesh m;
  m.kind = DomainKind::unit_disk;
  const int R = n_rings, S = n_sectors;

  // ring i (1..R) at radius i/R with i*S equally spaced vertices
  std::vector<int> ring_start(R + 1, 0);
  m.vertices.push_back({0.0, 0.0});
  for (int i = 1; i <= R; ++i) {
    ring_start[i] = m.n_vertices();
    const int n = i * S;
    const double r = static_cast<double>(i) / R;
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * M_PI * k / n;
      m.vertices.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  m.is_boundary.assign(m.vertices.size(), 0);
  for (int k = 0; k < R * S; ++k) m.is_boundary[ring_start[R] + k] = 1;

  // center fan
  for (int k = 0; k < S; ++k)
    m.triangles.push_back({0, ring_start[1] + k, ring_start[1] + (k + 1) % S});

  // annulus between ring i (i*S pts) and ring i+1 ((i+1)*S pts), sector by
  // sector: chains of i+1 inner and i+2 outer points share the radial sector
  // boundaries; 2i+1 triangles per sector.
  for (int i = 1; i < R; ++i) {
    const int ni = i * S, no = (i + 1) * S;
    for (int s = 0; s < S; ++s) {
      auto inner = [&](int k) { return ring_start[i] + (i * s + k) % ni; };
      auto outer = [&](int k) { return ring_start[i + 1] + ((i + 1) * s + k) % no; };
      for (int k = 0; k < i; ++k) {
        m.triangles.push_back({inner(k), outer(k), outer(k + 1)});
        m.triangles.push_back({inner(k), outer(k + 1), inner(k + 1)});
      }
      m.triangles.push_back({inner(i), outer(i), outer(i + 1)});
    }
  }

  const int nb = R * S;
  for (int k = 0; k < nb; ++k)
    m.boundary_edges.push_back({ring_start[R] + k, ring_start[R] + (k + 1) % nb});
  m.finalize();
  return m;
}

Mesh scale_mesh(const Mesh& m, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale_mesh: factor must be positive");
  Mesh out = m;
  for (auto& v : out.vertices) v = v * factor;
  out.finalize();
  return out;
}

double dist_to_boundary(const Mesh& m, int vertex_index) {
  if (vertex_index < 0 || vertex_index >= m.n_vertices())
    throw std::invalid_argument("dist_to_boundary: vertex index out of range");
  return m.boundary_dist[vertex_index];
}

std::vector<char> interior_mask(const Mesh& m, double kappa) {
  std::vector<char> mask(m.n_vertices(), 0);
  for (int v = 0; v < m.n_vertices(); ++v) mask[v] = m.boundary_dist[v] >= kappa ? 1 : 0;
  return mask;
}

double mesh_spacing(const Mesh& m) {
  return std::sqrt(2.0 * m.total_area / m.n_triangles());
}

ScalarField make_field(const Mesh& m, double value) {
  ScalarField f;
  f.mesh = &m;
  f.v = Eigen::VectorXd::Constant(m.n_vertices(), value);
  return f;
}

ScalarField make_field(const Mesh& m, const std::function<double(Vec2)>& fn) {
  ScalarField f;
  f.mesh = &m;
  f.v.resize(m.n_vertices());
  for (int i = 0; i < m.n_vertices(); ++i) f.v[i] = fn(m.vertices[i]);
  return f;
}

Vec2 field_gradient(const ScalarField& u, int t) {
  const Mesh& m = *u.mesh;
  const auto& tri = m.triangles[t];
  Vec2 g{0.0, 0.0};
  for (int k = 0; k < 3; ++k) g += u.v[tri[k]] * m.grad_hat[t][k];
  return g;
}

double integrate(const ScalarField& u, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("integrate: exponent must be positive");
  const Mesh& m = *u.mesh;
  double total = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const double a = u.v[tri[0]], b = u.v[tri[1]], c = u.v[tri[2]];
    const double m01 = 0.5 * (a + b), m12 = 0.5 * (b + c), m20 = 0.5 * (c + a);
    total += m.tri_area[t] / 3.0 *
             (std::pow(std::abs(m01), s) + std::pow(std::abs(m12), s) + std::pow(std::abs(m20), s));
  }
  return total;
}

double eval_at(const ScalarField& u, const Vec2& x) {
  const Mesh& m = *u.mesh;
  // Brute-force fallback is fine for the resampling volumes we use, but a
  // linear scan per query would dominate cross-mesh interpolation, so scan
  // with an early exit on containment and keep the best near-miss.
  double best_deficit = -std::numeric_limits<double>::infinity();
  int best_t = -1;
  double best_l[3] = {0, 0, 0};
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const Vec2 p0 = m.vertices[tri[0]], p1 = m.vertices[tri[1]], p2 = m.vertices[tri[2]];
    const double twice = 2.0 * m.tri_area[t];
    const double l0 = cross(p1 - x, p2 - x) / twice;
    const double l1 = cross(p2 - x, p0 - x) / twice;
    const double l2 = cross(p0 - x, p1 - x) / twice;
    const double deficit = std::min({l0, l1, l2});
    if (deficit > best_deficit) {
      best_deficit = deficit;
      best_t = t;
      best_l[0] = l0;
      best_l[1] = l1;
      best_l[2] = l2;
      if (deficit >= 0.0) break;
    }
  }
  if (best_t < 0 || best_deficit < -1e-9)
    throw std::invalid_argument("eval_at: point outside mesh");
  double l0 = std::max(best_l[0], 0.0), l1 = std::max(best_l[1], 0.0), l2 = std::max(best_l[2], 0.0);
  const double s = l0 + l1 + l2;
  l0 /= s;
  l1 /= s;
  l2 /= s;
  const auto& tri = m.triangles[best_t];
  return l0 * u.v[tri[0]] + l1 * u.v[tri[1]] + l2 * u.v[tri[2]];
}

}  // namespace flatcore
