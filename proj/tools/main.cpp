#include "sdq_cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return sdq::run(argc, argv, std::cout, std::cerr);
}
