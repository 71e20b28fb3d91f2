#include <gridtopo/cli/cli.hpp>

int main(int argc, char** argv)
{
    return gridtopo::cli::run_cli(argc, argv);
}
