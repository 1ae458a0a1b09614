class Outer<T> {
    private T item;

    class Inner {
        T get() {
            return item;
        }
    }

    static <K> K pick(K key, Outer<K> other) {
        Inner unused = null;
        return key;
    }
}
