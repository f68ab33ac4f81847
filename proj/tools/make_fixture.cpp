// Writes the small synthetic series used by the pipeline tests.
#include "ssal/data.hpp"
#include "ssal/synthetic.hpp"

#include <array>
#include <iostream>

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::cerr << "usage: make_fixture <out.csv>\n";
        return 2;
    }
    const ssal::Index rows = 500;
    const ssal::Matrix base = ssal::synthetic::periodic_cause(rows, 12, 3, 0.1, 7);
    const std::array<double, 2> coeffs{1.2, -0.5};
    const ssal::Matrix ar = ssal::synthetic::ar_series(rows, 1, coeffs, 0.1, 11);

    ssal::SeriesFrame frame;
    frame.values.resize(rows, 4);
    frame.values << base, ar;
    frame.feature_names = {"periodic", "noise", "target", "ar"};
    ssal::write_csv(argv[1], frame, 10);
    return 0;
}
