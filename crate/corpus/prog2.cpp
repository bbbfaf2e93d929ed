int main()
{
    int integer1;
    int integer2;
    int sum;
    std::cin >> integer1;
    std::cin >> integer2;
    sum = integer1 + integer2;
    std::cout << "Sum is " << sum << std::endl;
    return 0;
}
