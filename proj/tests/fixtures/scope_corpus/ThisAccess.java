class ThisAccess {
    private int count;

    void set(int count) {
        this.count = count;
        helper();
        this.helper();
    }

    void helper() {
    }
}
