int main()
{
    int total = 0;
    int gradeCounter = 1;
    int grade;
    int average;
    while (gradeCounter <= 10) {
        cout << "Enter grade: ";
        cin >> grade;
        total = total + grade;
        gradeCounter = gradeCounter + 1;
    }
    average = total / 10;
    cout << "Class average is " << average << endl;
    return 0;
}
