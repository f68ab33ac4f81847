#pragma once

#include "ssal/core.hpp"

#include <filesystem>
#include <vector>

namespace ssal {

/// Mean over time and maps of each feature column.
RowVector mean_saliency_per_feature(const std::vector<Matrix>& maps);

/// One-sided DFT magnitudes, bins 0..floor(w/2); magnitudes[0] is the DC term.
struct Spectrum {
    Vector magnitudes;
    /// Length of the transformed signal.
    Index length = 0;

    Index bins() const { return magnitudes.size(); }
};

/// Direct O(w^2) DFT of the mean-removed column.
Spectrum fft_magnitude(const Eigen::Ref<const Vector>& column);

/// Sum of squares of the transformed signal recovered from a one-sided
/// spectrum, i.e. (1/w) sum_k |X_k|^2 over the full two-sided range.
double spectral_energy(const Spectrum& spectrum);

/// Share of non-DC power in the strongest non-DC bin. 1 for a pure tone; 0 for an all-zero spectrum.
double periodicity_score(const Spectrum& spectrum);

/// Plain PGM ("P2"): width = features, height = window rows, maxval 255,
/// pixel = floor(m * 255 + 0.5). Values must lie in [0, 1].
void export_heatmap_pgm(const Matrix& mask, const std::filesystem::path& path);

using PixelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

PixelMatrix quantize_mask(const Matrix& mask);
PixelMatrix read_pgm(const std::filesystem::path& path);

struct FeatureImportance {
    RowVector mean_saliency;
    /// periodicity_score of each feature's data column, averaged over the explained windows.
    RowVector periodicity;
};

/// Pairs each feature's mean saliency with how periodic its input data is.
FeatureImportance feature_importance(const std::vector<Matrix>& maps, const std::vector<Matrix>& images);

} // namespace ssal
