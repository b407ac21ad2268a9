// Computes the true natural indirect effect of every *.spec in a directory and
// writes the table the acceptance run compares against.
//
//   oracle_fixtures <dir> [draws] [seed]

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ckg/synth.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: oracle_fixtures <dir> [draws] [seed]\n";
        return 2;
    }
    const fs::path dir = argv[1];
    const std::size_t draws = argc > 2 ? std::stoull(argv[2]) : 10'000'000;
    const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 20240101;

    std::vector<fs::path> specs;
    for (const auto& e : fs::directory_iterator(dir / "scm"))
        if (e.path().extension() == ".spec") specs.push_back(e.path());
    std::sort(specs.begin(), specs.end());

    try {
        std::ofstream out(dir / "true_acme.tsv", std::ios::binary);
        out << "spec\tvalue\tmc_se\tdraws\tseed\n";
        for (const auto& path : specs) {
            auto spec = ckg::synth::load_spec(path.string());
            auto truth = ckg::synth::true_acme(spec, draws, seed);
            char line[256];
            std::snprintf(line, sizeof line, "%s\t%.12g\t%.6g\t%zu\t%llu\n", path.stem().c_str(), truth.value,
                          truth.mc_se, truth.draws, static_cast<unsigned long long>(seed));
            out << line;
            std::cout << line;
        }
    } catch (const ckg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
