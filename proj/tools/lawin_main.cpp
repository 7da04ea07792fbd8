#include <iostream>

int main() {
    std::cout << "lawin: placeholder\n";
    return 0;
}
