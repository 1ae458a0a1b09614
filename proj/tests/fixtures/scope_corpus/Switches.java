class Switches {
    static final int LIMIT = 3;

    String name(int k) {
        switch (k) {
            case 1:
                String one = "one";
                return one;
            default:
                return k > LIMIT ? "many" : "few";
        }
    }

    int arrow(int k) {
        return switch (k) {
            case 0 -> LIMIT;
            default -> {
                int doubled = k * 2;
                yield doubled;
            }
        };
    }
}
