#include "rails/cli.hpp"

int main(int argc, char** argv)
{
    return rails::cli::run(argc, argv);
}
