enum Color {
    RED, GREEN;

    private final int code = 0;

    static Color fallback() {
        return RED;
    }

    boolean warm() {
        return this == RED || code > 0;
    }
}
