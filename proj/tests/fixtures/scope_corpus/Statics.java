import static java.lang.Math.max;
import static java.lang.Math.*;

class Statics {
    int pick(int a, int b) {
        return max(a, b) + abs(a) + min(a, b);
    }

    int min(int a, int b) {
        return a;
    }
}
