package com.acme.util;

public final class Strings {

    private Strings() {
    }

    public static boolean isBlank(String s) {
        return s == null || s.trim().isEmpty();
    }

    public static String repeat(String s, int times) {
        StringBuilder sb = new StringBuilder();
        for (int i = 0; i < times; i++) {
            sb.append(s);
        }
        return sb.toString();
    }

    public static String[] splitCsv(String line) {
        return line.split(",");
    }

    public static String join(String sep, String... parts) {
        return String.join(sep, parts);
    }

    static int count(String s, char c) {
        int n = 0;
        for (char x : s.toCharArray()) {
            if (x == c) {
                n++;
            }
        }
        return n;
    }

    public static String reverse(String s) {
        return new StringBuilder(s).reverse().toString();
    }
}
