#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "semgap/app/synthetic.hpp"
#include "semgap/task.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Write a synthetic run directory with planted structure"};
    std::string root;
    semgap::app::SyntheticOptions options;
    app.add_option("dir", root, "Output directory")->required();
    app.add_option("--seed", options.seed, "Random seed");
    app.add_option("--hidden-size", options.hidden_size, "Vector dimension");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto fixture = semgap::app::write_synthetic_fixture(root, options);
        std::cout << "manifest: " << fixture.manifest.string() << '\n';
        for (const auto& [model, tasks] : fixture.planted) {
            for (const auto& [task, templates] : tasks) {
                for (const auto& [id, acc] : templates) {
                    std::cout << model << ' ' << semgap::to_string(task) << ' ' << id << " planted_accuracy=" << acc
                              << (fixture.winner.at(model).at(task) == id ? " (winner)" : "") << '\n';
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
