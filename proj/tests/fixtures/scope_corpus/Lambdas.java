import java.util.function.Function;

class Lambdas {
    int base = 3;

    Function<Integer, Integer> adder() {
        return x -> x + base;
    }

    int apply(Function<Integer, Integer> fn, int y) {
        Function<Integer, Integer> twice = z -> fn.apply(fn.apply(z));
        return twice.apply(y);
    }
}
