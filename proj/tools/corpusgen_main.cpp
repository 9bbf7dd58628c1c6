// Deterministic synthetic-corpus generator: writes evidence inputs plus a
// ready-to-run pipeline config into a directory.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ppikit/corpusgen.hpp"
#include "ppikit/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

int main(int argc, char** argv) {
    CLI::App app{"synthetic evidence-corpus generator"};
    std::string out_dir;
    std::size_t pairs = 300;
    std::uint64_t seed = 1;
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--pairs", pairs, "number of interaction pairs");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        ppikit::corpusgen::CorpusSpec spec;
        spec.n_pairs = pairs;
        spec.seed = seed;
        const auto corpus = ppikit::corpusgen::generate_files(spec);

        fs::create_directories(out_dir);
        const fs::path dir(out_dir);
        ppikit::write_file((dir / "intact.mitab").string(), corpus.mitab);
        ppikit::write_file((dir / "string_links.tsv").string(), corpus.string_tsv);
        ppikit::write_file((dir / "proteins.fasta").string(), corpus.fasta);

        json jsonl_inputs = json::array();
        for (const auto& [source, text] : corpus.jsonl) {
            std::string name = source;
            for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            const std::string file = "evidence_" + name + ".jsonl";
            ppikit::write_file((dir / file).string(), text);
            jsonl_inputs.push_back({{"source", source}, {"path", (dir / file).string()}});
        }

        json config;
        config["paths"] = {{"mitab", (dir / "intact.mitab").string()},
                           {"string_links", (dir / "string_links.tsv").string()},
                           {"jsonl", jsonl_inputs},
                           {"fasta", (dir / "proteins.fasta").string()},
                           {"out_dir", (dir / "out").string()}};
        config["client"] = {{"endpoint", "mock://synth"},
                            {"model_id", "mock-labeler"},
                            {"concurrency", 4},
                            {"rate_per_sec", 0.0},
                            {"max_retries", 2}};
        ppikit::write_file((dir / "config.json").string(), config.dump(2) + "\n");
        std::cout << "wrote corpus (" << pairs << " pairs, seed " << seed << ") to " << out_dir
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
