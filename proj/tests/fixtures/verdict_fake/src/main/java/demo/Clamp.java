package demo;

public class Clamp {

    public int clamp(int value) {
        if (value < 0) {
            return 0;
        }
        return Math.min(value, 3);
    }
}
