#pragma once

#include <memory>
#include <string>

#include "flatcore/mesh.hpp"

namespace flatcore {

// Text persistence of a field together with its mesh; grammar in
// docs/formats.md. Values are printed with %.17g so that save/load round
// trips exactly.
void save_field(const std::string& path, const ScalarField& u);

// The loaded field points at the mesh held by the same result object.
struct LoadedField {
  std::unique_ptr<Mesh> mesh;
  ScalarField field;
};
LoadedField load_field(const std::string& path);

}  // namespace flatcore
