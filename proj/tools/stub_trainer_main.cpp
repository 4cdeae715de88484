// tpt-stub-trainer <spec.json>
//
// Trainer hook for simulated models: applies the simulator update rule to the
// input state and writes <output_name>.state.json plus model_ref.out next to
// the job spec. Exit 0 ok, 1 training failure, 2 unusable job spec.

#include <iostream>

#include "tpt/simbackend.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: tpt-stub-trainer <spec.json>\n";
        return 2;
    }
    return tpt::sim::run_stub_trainer(argv[1], std::cout);
}
