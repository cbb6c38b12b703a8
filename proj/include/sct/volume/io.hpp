#pragma once

#include <filesystem>

#include "sct/volume/volume.hpp"

namespace sct {

// Native "vvol" format: one UTF-8 JSON header line
//   {"dims":[D,H,W],"spacing":[sz,sy,sx],"domain":"HU|NORM_MR|NORM_CT|RAW"}\n
// followed by D*H*W little-endian float32 values, row-major with x fastest.

Volume load_volume(const std::filesystem::path& path);
void save_volume(const Volume& v, const std::filesystem::path& path);

/// Masks are stored as RAW 0/1 vvol files.
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const BinaryMask& m, const std::filesystem::path& path, Spacing spacing = {});

/// Which intensity domain an imported NIfTI file is placed in.
enum class NiftiKind { CT, MR };

/// Uncompressed single-file NIfTI-1 (.nii) import. Supports int16 and float32
/// payloads and applies scl_slope/scl_inter. CT is clamped into the HU range;
/// MR is returned as RAW.
Volume import_nifti(const std::filesystem::path& path, NiftiKind kind);

}  // namespace sct
