#include "ssal/analysis.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

namespace ssal {

RowVector mean_saliency_per_feature(const std::vector<Matrix>& maps)
{
    if (maps.empty()) throw ValidationError("mean_saliency_per_feature: no maps");
    RowVector acc = RowVector::Zero(maps.front().cols());
    for (const Matrix& m : maps) {
        if (m.rows() != maps.front().rows() || m.cols() != maps.front().cols())
            throw ValidationError("mean_saliency_per_feature: shape mismatch " + shape_of(m) + " vs " +
                                  shape_of(maps.front()));
        acc += m.colwise().mean();
    }
    return acc / static_cast<double>(maps.size());
}

Spectrum fft_magnitude(const Eigen::Ref<const Vector>& column)
{
    const Index w = column.size();
    if (w < 2) throw ValidationError("fft_magnitude: need at least 2 samples");
    const Vector x = column.array() - column.mean();
    Spectrum s;
    s.length = w;
    s.magnitudes.resize(w / 2 + 1);
    for (Index k = 0; k <= w / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (Index t = 0; t < w; ++t) {
            // Reduce k*t mod w first so the angle stays small and exact.
            const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * t) % w) / static_cast<double>(w);
            re += x(t) * std::cos(angle);
            im -= x(t) * std::sin(angle);
        }
        s.magnitudes(k) = std::hypot(re, im);
    }
    return s;
}

double spectral_energy(const Spectrum& s)
{
    const Index w = s.length;
    double total = s.magnitudes(0) * s.magnitudes(0);
    for (Index k = 1; k < s.bins(); ++k) {
        const bool nyquist = (w % 2 == 0) && k == w / 2;
        total += (nyquist ? 1.0 : 2.0) * s.magnitudes(k) * s.magnitudes(k);
    }
    return total / static_cast<double>(w);
}

double periodicity_score(const Spectrum& s)
{
    if (s.bins() < 2) throw ValidationError("periodicity_score: no non-DC bins");
    const auto power = s.magnitudes.tail(s.bins() - 1).array().square();
    const double total = power.sum();
    if (!(total > 0.0)) return 0.0;
    return power.maxCoeff() / total;
}

PixelMatrix quantize_mask(const Matrix& mask)
{
    if ((mask.array() < 0.0).any() || (mask.array() > 1.0).any() || !mask.allFinite())
        throw ValidationError("heatmap: mask values must lie in [0, 1]");
    return (mask.array() * 255.0 + 0.5).floor().cast<int>().matrix();
}

void export_heatmap_pgm(const Matrix& mask, const std::filesystem::path& path)
{
    const PixelMatrix px = quantize_mask(mask);
    std::ofstream out(path);
    if (!out) throw RuntimeError("heatmap: cannot write " + path.string());
    out << "P2\n" << px.cols() << ' ' << px.rows() << "\n255\n";
    for (Index i = 0; i < px.rows(); ++i) {
        for (Index j = 0; j < px.cols(); ++j) out << (j ? " " : "") << px(i, j);
        out << '\n';
    }
    if (!out) throw RuntimeError("heatmap: write failed for " + path.string());
}

PixelMatrix read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw RuntimeError("pgm: cannot open " + path.string());
    std::string magic;
    Index width = 0, height = 0;
    int maxval = 0;
    if (!(in >> magic >> width >> height >> maxval) || magic != "P2" || width < 1 || height < 1 || maxval != 255)
        throw ValidationError("pgm: unsupported header in " + path.string());
    PixelMatrix px(height, width);
    for (Index i = 0; i < height; ++i)
        for (Index j = 0; j < width; ++j)
            if (!(in >> px(i, j))) throw ValidationError("pgm: truncated pixel data in " + path.string());
    return px;
}

FeatureImportance feature_importance(const std::vector<Matrix>& maps, const std::vector<Matrix>& images)
{
    if (maps.size() != images.size()) throw ValidationError("feature_importance: map/image count mismatch");
    FeatureImportance out;
    out.mean_saliency = mean_saliency_per_feature(maps);
    out.periodicity = RowVector::Zero(out.mean_saliency.size());
    for (const Matrix& img : images) {
        if (img.cols() != out.periodicity.size()) throw ValidationError("feature_importance: image shape mismatch");
        for (Index j = 0; j < img.cols(); ++j) out.periodicity(j) += periodicity_score(fft_magnitude(img.col(j)));
    }
    out.periodicity /= static_cast<double>(images.size());
    return out;
}

} // namespace ssal
