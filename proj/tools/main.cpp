#include <seqsel/cli.hpp>

int main(int argc, char** argv) { return seqsel::cli::run(argc, argv); }
