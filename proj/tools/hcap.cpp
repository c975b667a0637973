#include "hcap/cli.hpp"

int main(int argc, char** argv) {
  return hcap::runCli(argc, argv);
}
