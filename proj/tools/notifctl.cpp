#include <iostream>

#include "notif/cli.hpp"

int main(int argc, char** argv) {
  return notif::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
