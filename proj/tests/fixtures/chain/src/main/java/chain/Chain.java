package chain;

public class Chain {
    private int value;

    public Chain(int value) {
        this.value = value;
    }

    public int m1() {
        return value + 1;
    }

    public int m2() {
        return m1() * 2;
    }

    public int m3() {
        return m2() - 3;
    }
}
