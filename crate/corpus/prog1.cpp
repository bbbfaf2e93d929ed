int main ()
{
    std::cout << "Welcome to C++!\n";
    return 0;
}
