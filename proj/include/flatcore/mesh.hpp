#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flatcore/geometry.hpp"

namespace flatcore {

enum class DomainKind { rectangle, unit_disk };

// Conforming P1 triangle mesh. Immutable after construction: all derived
// quantities (areas, hat-function gradients, lumped masses, boundary
// distances) are precomputed by finalize().
struct Mesh {
  DomainKind kind = DomainKind::rectangle;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<char> is_boundary;               // 1 if vertex lies on the polygonal boundary
  std::vector<std::array<int, 2>> boundary_edges;

  // derived
  std::vector<double> tri_area;
  std::vector<std::array<Vec2, 3>> grad_hat;   // gradient of the three local hats (constant per triangle)
  std::vector<double> lumped_mass;             // sum of adjacent triangle areas / 3
  std::vector<double> boundary_dist;           // exact distance to the polygonal boundary
  double total_area = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  // Computes derived data and checks the construction invariants
  // (positive areas, boundary flags on the boundary, connectivity).
  void finalize();
};

// Uniform triangulation of [0,lx]x[0,ly]; each grid cell split into two
// triangles. (nx+1)*(ny+1) vertices.
Mesh build_rect_mesh(double lx, double ly, int nx, int ny);

// Concentric-ring triangulation of the unit disk: ring i (1..n_rings) at
// radius i/n_rings carries i*n_sectors vertices; a fan of n_sectors
// triangles surrounds the center. Boundary is the inscribed polygon.
Mesh build_disk_mesh(int n_rings, int n_sectors);

// Returns a copy with all vertex coordinates multiplied by factor > 0
// (same connectivity). Used for dilation experiments.
Mesh scale_mesh(const Mesh& m, double factor);

double dist_to_boundary(const Mesh& m, int vertex_index);

// Vertex mask of the interior shrink Omega_kappa = {x : dist(x, bdry) >= kappa}.
std::vector<char> interior_mask(const Mesh& m, double kappa);

// Characteristic mesh spacing: sqrt(2 * mean triangle area). Equals the grid
// step h for a uniform square grid; used for layer-resolution checks.
double mesh_spacing(const Mesh& m);

// ---------------------------------------------------------------------------

struct ScalarField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd v;

  double operator[](int i) const { return v[i]; }
  double& operator[](int i) { return v[i]; }
  int size() const { return static_cast<int>(v.size()); }
};

ScalarField make_field(const Mesh& m, double value = 0.0);
ScalarField make_field(const Mesh& m, const std::function<double(Vec2)>& f);

// Gradient of a P1 field on triangle t (constant vector).
Vec2 field_gradient(const ScalarField& u, int t);

// int_Omega |u|^s dx with the 3-point edge-midpoint rule per triangle
// (degree-2 exact; in particular exact for |u| of one-signed P1 fields at
// s=1). Requires s > 0.
double integrate(const ScalarField& u, double s);

// Point evaluation of a P1 field. Points marginally outside the mesh polygon
// (barycentric deficit < 1e-9) are clamped to the nearest triangle; anything
// farther out throws. Used for resampling fields between meshes.
double eval_at(const ScalarField& u, const Vec2& x);

}  // namespace flatcore
