int main ()
{
    int num1;
    int num2;
    cout << "Enter two integers\n";
    cin >> num1 >> num2;
    if (num1 == num2)
        cout << num1 << " is equal to " << num2 << endl;
    return 0;
}
