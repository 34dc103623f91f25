#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) { return impress::cli::run(std::vector<std::string>(argv, argv + argc)); }
