class Anonymous {
    Runnable make(int n) {
        return new Runnable() {
            int calls;

            public void run() {
                calls += n;
            }
        };
    }
}
