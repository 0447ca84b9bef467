#include "peck/cli.hpp"

int main(int argc, char** argv)
{
    return peck::run_cli(argc, argv);
}
