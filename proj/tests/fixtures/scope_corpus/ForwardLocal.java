class ForwardLocal {
    int x = 1;

    int f() {
        int y = x;
        int x = 2;
        return x + y;
    }
}
