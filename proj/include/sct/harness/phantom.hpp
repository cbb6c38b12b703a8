#pragma once

#include <cstdint>
#include <stdexcept>

#include "sct/volume/volume.hpp"

namespace sct::harness {

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Synthetic head: a randomly oriented ellipsoidal skull shell around a brain ellipsoid, air outside.
struct PhantomSpec {
    Dims3 dims{32, 32, 32};
    std::uint64_t seed = 0;
    double skull_hu_min = 800.0;
    double skull_hu_max = 1900.0;
    double brain_hu_min = 0.0;
    double brain_hu_max = 80.0;
    int shell_thickness = 3;
    double noise_mr1 = 0.05;
    double noise_mr2 = 0.05;

    /// Throws HarnessError on an empty or inverted HU range, thickness < 1 or negative noise.
    void validate() const;
};

/// mr1 and mr2 are RAW (un-normalized) contrasts; ct is in HU.
///
/// Tissue contrast (before noise):
///   class   mr1    mr2                                  ct
///   air     0      0                                    -1000
///   skull   0.10   0.45 + 0.35 (hu - lo) / (hi - lo)    cortical/diploe depth profile in [lo, hi]
///   brain   0.75   0.20                                 one value per subject in the brain range
/// mr1 shows the skull as a faint band with no density information; mr2 has a dark brain and
/// a bright skull whose intensity rises with bone density.
struct Phantom {
    Volume mr1;
    Volume mr2;
    Volume ct;
    BinaryMask skull;
    BinaryMask brain;
};

/// Deterministic per spec. The skull mask equals ct >= 300 HU.
/// Throws HarnessError when the dims cannot hold a shell with a non-empty interior.
Phantom make_phantom(const PhantomSpec& spec);

}  // namespace sct::harness
