#include "pocsim/runner.hpp"

int main(int argc, char** argv) { return pocsim::runner::run(argc, argv); }
