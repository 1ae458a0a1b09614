import java.util.Comparator;

class Box<T extends Comparable<T>> {
    private T value;

    <R> R map(java.util.function.Function<? super T, ? extends R> f) {
        return f.apply(value);
    }

    int compare(Box<T> other, Comparator<T> by) {
        return by.compare(value, other.value);
    }
}
