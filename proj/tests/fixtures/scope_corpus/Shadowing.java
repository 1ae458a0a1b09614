package demo;

class Shadowing {
    int value;

    int read(int value) {
        return value;
    }

    int readField() {
        return value;
    }

    int nested() {
        int value = 1;
        {
            int value2 = value;
            return value2;
        }
    }
}
