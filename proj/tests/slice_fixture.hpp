#pragma once

#include <vector>

#include "rpr/atlas.hpp"

namespace fixture {

/// The reference geometry analysed at rho1 = 17 on the default 512 grid, computed once.
const rpr::SliceAtlas& reference_atlas();
const rpr::Manipulator& reference_manipulator();

/// Image curve crossings of the straight joint segment a -> b: (image index, source arc s).
struct Crossing {
    int image = -1;
    double s = 0.0;
    double lambda = 0.0;
};
std::vector<Crossing> crossings(const std::vector<rpr::TracedCurve>& images, rpr::Vec2 a, rpr::Vec2 b);

}  // namespace fixture
