#include "uvc/cli.hpp"

int main(int argc, char** argv) { return uvc::cli::run(argc, argv); }
